//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::http::{Method, StatusCode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use spineplan_core::script::{parse_script, run_script};
use spineplan_core::*;
use spineplan_service::api::ScrewView;
use spineplan_service::client::{call, ServiceTarget};
use spineplan_service::{router, AppState, Config};

const Z_TOL: f64 = 1e-9;
const LENGTH_TOL: f64 = 1e-6;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn b(x1: f64, y1: f64, x2: f64, y2: f64, c: f64) -> BBox {
    BBox::new(x1, y1, x2, y2, c).unwrap()
}

/// z of `p` as read back through a view's inverse calibration.
fn z_via(p: &Point3, cal: &ViewCalibration) -> f64 {
    cal.world_z(project(p, cal).v)
}

/// A session with L4 labeled in both views and one left L4 screw.
fn screwed_session(id: &str) -> (Session, ScrewId) {
    let mut s = Session::new(id, &ImageMeta::new("ap.png", 512, 1024), &ImageMeta::new("lp.png", 512, 1024)).unwrap();
    s.attach_detections(ViewKind::Ap, vec![b(202.0, 458.0, 310.0, 538.0, 0.95)]).unwrap();
    s.attach_detections(ViewKind::Lp, vec![b(176.0, 462.0, 304.0, 540.0, 0.94)]).unwrap();
    let l4: VertebraLabel = "L4".parse().unwrap();
    s.label_vertebra(ViewKind::Ap, Point2::new(256.0, 498.0), l4).unwrap();
    s.label_vertebra(ViewKind::Lp, Point2::new(240.0, 501.0), l4).unwrap();
    let id = s.add_screw(l4, Side::Left).unwrap().id;
    (s, id)
}

fn shared_axis_sync() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa515);
    let (sequences, steps) = (10, 1000);
    let mut worst: f64 = 0.0;
    let mut degenerate = 0;
    let start = Instant::now();
    for _ in 0..sequences {
        let (mut s, id) = screwed_session("sync");
        for v in ViewKind::ALL {
            s.set_calibration(v, rng.gen_range(0.2..=5.0), rng.gen_range(-200.0..=200.0)).unwrap();
        }
        for step in 0..steps {
            let view = if step % 2 == 0 { ViewKind::Ap } else { ViewKind::Lp };
            let endpoint = if rng.gen_bool(0.5) { Endpoint::Entry } else { Endpoint::Target };
            let to = Point2::new(rng.gen_range(-100.0..600.0), rng.gen_range(-100.0..1100.0));
            match s.move_endpoint(id, view, endpoint, to) {
                Ok(_) => {}
                Err(SessionError::DegenerateScrew) => degenerate += 1,
                Err(e) => return Err(format!("drag {step} failed: {e}")),
            }
            let screw = s.screw(id).unwrap();
            for p in [screw.entry, screw.target] {
                let za = z_via(&p, s.view(ViewKind::Ap).calibration());
                let zl = z_via(&p, s.view(ViewKind::Lp).calibration());
                let err = (za - zl).abs().max((za - p.z).abs());
                worst = worst.max(err);
                ensure(err <= Z_TOL, || format!("step {step}: z via AP {za} vs LP {zl} (world {})", p.z))?;
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("{} drags, max z disagreement {worst:.1e}, {degenerate} degenerate rejected, {elapsed:.0?}", sequences * steps))
}

fn hit_oracle(p: Point2, boxes: &[BBox]) -> Option<usize> {
    let area = |b: &BBox| (b.x2 - b.x1) * (b.y2 - b.y1);
    (0..boxes.len())
        .filter(|&i| {
            let b = &boxes[i];
            b.x1 <= p.u && p.u <= b.x2 && b.y1 <= p.v && p.v <= b.y2
        })
        .min_by(|&i, &j| {
            area(&boxes[i])
                .total_cmp(&area(&boxes[j]))
                .then(boxes[j].confidence.total_cmp(&boxes[i].confidence))
                .then(i.cmp(&j))
        })
}

fn hit_test_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x417);
    let start = Instant::now();
    let mut hits = 0;
    for case in 0..10_000 {
        let n = rng.gen_range(0..12);
        let boxes: Vec<BBox> = (0..n)
            .map(|_| {
                let (x, y) = (rng.gen_range(0..40) as f64, rng.gen_range(0..40) as f64);
                let (w, h) = (rng.gen_range(1..20) as f64, rng.gen_range(1..20) as f64);
                b(x, y, x + w, y + h, rng.gen_range(0..=4) as f64 / 4.0)
            })
            .collect();
        let p = if rng.gen_bool(0.5) {
            Point2::new(rng.gen_range(0..60) as f64, rng.gen_range(0..60) as f64)
        } else {
            Point2::new(rng.gen_range(-1.0..60.0), rng.gen_range(-1.0..60.0))
        };
        let (got, want) = (hit_test(p, &boxes), hit_oracle(p, &boxes));
        ensure(got == want, || format!("case {case}: {got:?} != oracle {want:?} at {p:?} in {boxes:?}"))?;
        hits += got.is_some() as usize;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("10000 cases ({hits} hits), {elapsed:.0?}"))
}

fn random_box(rng: &mut ChaCha8Rng) -> BBox {
    loop {
        let x = rng.gen_range(-1e5..1e5);
        let y = rng.gen_range(-1e5..1e5);
        let w = 10f64.powf(rng.gen_range(-5.0..4.0));
        let h = 10f64.powf(rng.gen_range(-5.0..4.0));
        if let Ok(bx) = BBox::new(x, y, x + w, y + h, rng.gen_range(0.0..=1.0)) {
            return bx;
        }
    }
}

fn bbox_grammar() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb0c5);
    for case in 0..1000 {
        let boxes: Vec<BBox> = (0..rng.gen_range(0..20)).map(|_| random_box(&mut rng)).collect();
        let text = serialize_bbox_file(&boxes);
        let back = parse_bbox_file(&text).map_err(|e| format!("list {case}: {e}"))?;
        ensure(back == boxes, || format!("list {case} did not round-trip"))?;
    }
    let mut kinds = [0usize; 6];
    for case in 0..1000 {
        let boxes: Vec<BBox> = (0..rng.gen_range(1..20)).map(|_| random_box(&mut rng)).collect();
        let bad = rng.gen_range(0..boxes.len());
        let kind = rng.gen_range(0..6);
        kinds[kind] += 1;
        let mut lines = Vec::new();
        let mut bad_line = 0;
        for (i, bx) in boxes.iter().enumerate() {
            if rng.gen_bool(0.2) {
                lines.push(if rng.gen_bool(0.5) { "# comment".to_string() } else { String::new() });
            }
            let mut f: Vec<String> = [bx.x1, bx.y1, bx.x2, bx.y2, bx.confidence].iter().map(f64::to_string).collect();
            if i == bad {
                match kind {
                    0 => {
                        f.pop();
                    }
                    1 => f.push("0.5".into()),
                    2 => f[rng.gen_range(0..5)] = "1.5e".into(),
                    3 => f.swap(0, 2),
                    4 => f.swap(1, 3),
                    _ => f[4] = if rng.gen_bool(0.5) { "1.01" } else { "-0.2" }.into(),
                }
            }
            lines.push(f.join(" "));
            if i == bad {
                bad_line = lines.len();
            }
        }
        match parse_bbox_file(&lines.join("\n")) {
            Err(e) if e.line == bad_line => {}
            Err(e) => return Err(format!("corruption {case}: reported line {} instead of {bad_line}", e.line)),
            Ok(_) => return Err(format!("corruption {case} (kind {kind}) was accepted")),
        }
    }
    Ok(format!("1000 round trips; 1000 corruptions by kind {kinds:?} all located"))
}

fn workflow_reproduction() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("plan.json");
    let script = fixture("workflow.plan");
    let o = Command::new(env!("CARGO_BIN_EXE_spineplan"))
        .args(["plan", "--script", script.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || format!("cli exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)))?;
    let cli_bytes = std::fs::read(&out).map_err(|e| e.to_string())?;
    let doc = PlanDocument::from_text(std::str::from_utf8(&cli_bytes).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;

    // the L4 boxes are the second line of each fixture file
    let read = |f: &str| parse_bbox_file(&std::fs::read_to_string(fixture(f)).unwrap()).unwrap()[1];
    let (ap_l4, lp_l4) = (read("ap.txt"), read("lp.txt"));
    ensure(doc.screws.len() == 1, || format!("{} screws in plan", doc.screws.len()))?;
    let s = &doc.screws[0];
    ensure(s.vertebra_label.name() == "L4" && s.side == Side::Left, || format!("{} {}", s.vertebra_label, s.side))?;

    for (name, p) in [("entry", &s.entry), ("target", &s.target)] {
        ensure(ap_l4.contains_strictly(p.ap), || format!("{name} AP {:?} not strictly inside {ap_l4:?}", p.ap))?;
        ensure(lp_l4.contains_strictly(p.lp), || format!("{name} LP {:?} not strictly inside {lp_l4:?}", p.lp))?;
    }
    // default placement worked out by hand from the fixture boxes at 0.25 mm/px:
    // AP u at 30% / 55% of 202..310, LP u at 15% / 70% of 176..304,
    // z at the AP box centre row 498
    let mm = |px: f64| 0.25 * px;
    let want_entry = Point3::new(mm(202.0 + 0.30 * 108.0), mm(176.0 + 0.15 * 128.0), mm(498.0));
    let want_target = Point3::new(mm(202.0 + 0.55 * 108.0), mm(176.0 + 0.70 * 128.0), mm(498.0));
    for (name, got, want) in [("entry", s.entry.world, want_entry), ("target", s.target.world, want_target)] {
        ensure(got.distance(&want) <= 1e-9, || format!("{name} at {got:?}, expected {want:?}"))?;
    }
    let length = s.entry.world.distance(&s.target.world);
    ensure((s.length_mm - length).abs() <= LENGTH_TOL, || format!("stored length {} vs {length}", s.length_mm))?;

    let parsed = parse_script(&std::fs::read_to_string(&script).unwrap()).map_err(|e| e.to_string())?;
    let mut target = ServiceTarget::new(router(AppState::new(Config::default())));
    let served = run_script(&parsed, &mut target, script.parent().unwrap()).map_err(|e| e.to_string())?;
    ensure(served.as_bytes() == cli_bytes.as_slice(), || "CLI and service plans differ".to_string())?;
    Ok(format!("L4/L5 labeled, left L4 screw strictly inside both L4 boxes, length {length:.6} mm, CLI == service ({} bytes)", cli_bytes.len()))
}

/// A session built from a random walk over the session operations.
fn random_session(rng: &mut ChaCha8Rng, n: usize) -> Session {
    let dims = |rng: &mut ChaCha8Rng| rng.gen_range(200..800);
    let ap = ImageMeta::new(format!("ap-{n}.png"), dims(rng), dims(rng));
    let lp = ImageMeta::new(format!("lp-{n}.png"), dims(rng), dims(rng));
    let mut s = Session::new(format!("case-{n}"), &ap, &lp).unwrap();
    // a few lumbar levels, so that labels pair up and screws get placed
    let labels: Vec<VertebraLabel> = ["L2", "L3", "L4", "L5"].iter().map(|l| l.parse().unwrap()).collect();
    for step in 0..rng.gen_range(30..150) {
        let view = if rng.gen_bool(0.5) { ViewKind::Ap } else { ViewKind::Lp };
        // detections come first; re-attaching would drop the labels and screws built on them
        let op = if step < 2 { 0 } else { rng.gen_range(1..20) };
        let view = if step < 2 { ViewKind::ALL[step] } else { view };
        let _ = match op {
            0 => {
                let (w, h) = s.view(view).display_dims();
                let boxes = (0..rng.gen_range(1..8))
                    .map(|_| {
                        let (x, y) = (rng.gen_range(0.0..w - 20.0), rng.gen_range(0.0..h - 20.0));
                        b(x, y, x + rng.gen_range(1.0..20.0), y + rng.gen_range(1.0..20.0), rng.gen_range(0.0..=1.0))
                    })
                    .collect();
                s.attach_detections(view, boxes)
            }
            1 => {
                let r = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270][rng.gen_range(0..4)];
                s.set_orientation(view, r, rng.gen_bool(0.3));
                Ok(())
            }
            2 => s.set_calibration(view, rng.gen_range(0.2..5.0), rng.gen_range(-200.0..200.0)),
            3..=10 => {
                let boxes = s.view(view).boxes();
                if boxes.is_empty() {
                    Ok(())
                } else {
                    let bx = boxes[rng.gen_range(0..boxes.len())];
                    let label = labels[rng.gen_range(0..labels.len())];
                    s.label_vertebra(view, Point2::new(bx.center_u(), bx.center_v()), label).map(|_| ())
                }
            }
            11..=13 => {
                let paired: Vec<VertebraLabel> = labels.iter().copied().filter(|l| s.labels().is_paired(*l)).collect();
                if paired.is_empty() {
                    Ok(())
                } else {
                    let side = if rng.gen_bool(0.5) { Side::Left } else { Side::Right };
                    s.add_screw(paired[rng.gen_range(0..paired.len())], side).map(|_| ())
                }
            }
            14..=17 if !s.screws().is_empty() => {
                let id = s.screws()[rng.gen_range(0..s.screws().len())].id;
                let e = if rng.gen_bool(0.5) { Endpoint::Entry } else { Endpoint::Target };
                s.move_endpoint(id, view, e, Point2::new(rng.gen_range(0.0..400.0), rng.gen_range(0.0..400.0))).map(|_| ())
            }
            18 if !s.screws().is_empty() => {
                let id = s.screws()[rng.gen_range(0..s.screws().len())].id;
                s.set_screw_params(id, Some(rng.gen_range(3.0..8.5)), Some(format!("type-{}", rng.gen_range(0..3)))).map(|_| ())
            }
            _ => Ok(()),
        };
    }
    s
}

fn session_persistence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e55);
    let (mut screws, mut with_screws, mut corruptions) = (0, 0, 0);
    for n in 0..100 {
        let s = random_session(&mut rng, n);
        screws += s.screws().len();
        with_screws += !s.screws().is_empty() as usize;
        let bytes = s.save();
        let loaded = Session::load(&bytes).map_err(|e| format!("session {n}: {e}"))?;
        ensure(loaded == s, || format!("session {n} changed on load"))?;
        ensure(loaded.save() == bytes, || format!("session {n} not byte-identical after save/load/save"))?;

        for k in 0..20 {
            let mut bad = bytes.clone();
            let at = rng.gen_range(0..bad.len());
            match k % 4 {
                0 => bad.truncate(at),
                1 => bad[at] ^= rng.gen_range(1..=255u8),
                2 => bad.insert(at, rng.gen()),
                _ => {
                    bad.remove(at);
                }
            }
            corruptions += 1;
            match Session::load(&bad) {
                Err(SessionError::CorruptSession(_)) => {}
                Err(e) => return Err(format!("session {n} corruption {k}: wrong error {e}")),
                Ok(_) => return Err(format!("session {n} corruption {k} loaded")),
            }
        }
    }
    ensure(with_screws >= 50, || format!("only {with_screws} sessions have screws"))?;
    Ok(format!("100 sessions ({with_screws} with screws, {screws} in total) byte-identical; {corruptions} corrupted streams all rejected"))
}

fn hammer() -> Check {
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(8).enable_all().build().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let state = AppState::new(Config::default());
        let app = router(state.clone());
        let (session, id) = screwed_session("hammer");
        let body = json!({
            "id": "hammer",
            "ap": { "image_ref": "ap.png", "width": 512, "height": 1024 },
            "lp": { "image_ref": "lp.png", "width": 512, "height": 1024 },
        });
        ensure(call(&app, Method::POST, "/sessions", Some(&body)).await.status == StatusCode::CREATED, || "create failed".into())?;
        for (view, bx) in [("ap", session.view(ViewKind::Ap).boxes()), ("lp", session.view(ViewKind::Lp).boxes())] {
            call(&app, Method::PUT, &format!("/sessions/hammer/views/{view}/boxes"), Some(&json!({ "boxes": bx }))).await;
        }
        for (view, u, v) in [("ap", 256.0, 498.0), ("lp", 240.0, 501.0)] {
            call(&app, Method::POST, "/sessions/hammer/labels", Some(&json!({ "view": view, "u": u, "v": v, "label": "L4" }))).await;
        }
        let r = call(&app, Method::POST, "/sessions/hammer/screws", Some(&json!({ "vertebra_label": "L4", "side": "left" }))).await;
        ensure(r.status == StatusCode::CREATED, || format!("add screw: {}", r.text()))?;
        call(&app, Method::PUT, "/sessions/hammer/views/lp/calibration", Some(&json!({ "scale": 0.4, "v_offset": 37.0 }))).await;

        let barrier = Arc::new(tokio::sync::Barrier::new(100));
        let tasks: Vec<_> = (0..100)
            .map(|i| {
                let (app, barrier) = (app.clone(), barrier.clone());
                tokio::spawn(async move {
                    let view = if i % 2 == 0 { "ap" } else { "lp" };
                    let endpoint = if (i / 2) % 2 == 0 { "entry" } else { "target" };
                    let body = json!({ "view": view, "endpoint": endpoint, "u": 200.0 + i as f64, "v": 470.0 + i as f64 * 0.5 });
                    barrier.wait().await;
                    call(&app, Method::PATCH, &format!("/sessions/hammer/screws/{}/endpoint", id.0), Some(&body)).await
                })
            })
            .collect();
        let mut results = Vec::new();
        for t in tasks {
            let r = t.await.map_err(|e| e.to_string())?;
            ensure(r.status == StatusCode::OK, || format!("drag answered {}: {}", r.status, r.text()))?;
            results.push(r.json::<ScrewView>().map_err(|e| e.to_string())?.screw);
        }

        let s = state.snapshot("hammer").ok_or("session vanished")?;
        s.validate()?;
        ensure(s.screws().len() == 1, || format!("{} screws after hammer", s.screws().len()))?;
        let last = &s.screws()[0];
        ensure(results.contains(last), || "final screw is not the result of any single drag".into())?;
        for p in [last.entry, last.target] {
            let (za, zl) = (z_via(&p, s.view(ViewKind::Ap).calibration()), z_via(&p, s.view(ViewKind::Lp).calibration()));
            ensure((za - zl).abs() <= Z_TOL, || format!("shared z broken: {za} vs {zl}"))?;
        }
        let plan = call(&app, Method::GET, "/sessions/hammer/plan", None).await;
        ensure(plan.status == StatusCode::OK, || format!("export after hammer: {}", plan.text()))?;
        PlanDocument::from_text(&plan.text()).map_err(|e| e.to_string())?;
        Ok("100 concurrent drags serialized; session valid and exportable".to_string())
    })
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 6] = [
        ("shared-axis sync", shared_axis_sync),
        ("hit-test oracle", hit_test_oracle),
        ("bbox grammar", bbox_grammar),
        ("workflow reproduction", workflow_reproduction),
        ("session persistence", session_persistence),
        ("service linearizability hammer", hammer),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
