use proptest::prelude::*;
use spineplan_core::geometry::polygon_area;
use spineplan_core::*;

fn cal(view: ViewKind) -> impl Strategy<Value = ViewCalibration> {
    (0.2f64..5.0, -200.0f64..200.0).prop_map(move |(s, o)| ViewCalibration::new(view, s, o).unwrap())
}

fn point3() -> impl Strategy<Value = Point3> {
    (-300.0f64..300.0, -300.0f64..300.0, -300.0f64..300.0).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn screw() -> impl Strategy<Value = Screw> {
    (point3(), point3(), 0.5f64..10.0)
        .prop_filter("non-degenerate", |(a, b, _)| a.distance(b) > 1e-3)
        .prop_map(|(entry, target, diameter)| Screw {
            id: ScrewId(1),
            vertebra_label: "T10".parse().unwrap(),
            side: Side::Right,
            entry,
            target,
            diameter,
            screw_type: "generic-pedicle".into(),
        })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn bbox() -> impl Strategy<Value = BBox> {
    (0.0f64..500.0, 0.0f64..500.0, 1.0f64..100.0, 1.0f64..100.0)
        .prop_map(|(x, y, w, h)| BBox::new(x, y, x + w, y + h, 0.5).unwrap())
}

proptest! {
    #[test]
    fn both_views_read_the_same_z(p in point3(), ap in cal(ViewKind::Ap), lp in cal(ViewKind::Lp)) {
        let z_ap = ap.world_z(project(&p, &ap).v);
        let z_lp = lp.world_z(project(&p, &lp).v);
        prop_assert!(close(z_ap, p.z) && close(z_lp, p.z), "{z_ap} {z_lp} {}", p.z);
    }

    #[test]
    fn drag_to_current_position_is_a_no_op(
        s in screw(),
        ap in cal(ViewKind::Ap),
        lp in cal(ViewKind::Lp),
        in_ap in any::<bool>(),
        entry in any::<bool>(),
    ) {
        let (view, paired) = if in_ap { (ap, lp) } else { (lp, ap) };
        let which = if entry { Endpoint::Entry } else { Endpoint::Target };
        let here = project(s.endpoint(which), &view);
        let out = apply_drag(&s, &view, which, here, &paired).unwrap();
        for (a, b) in [(out.entry, s.entry), (out.target, s.target)] {
            prop_assert!(close(a.x, b.x) && close(a.y, b.y) && close(a.z, b.z), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn drag_preserves_hidden_coordinate(
        s in screw(),
        ap in cal(ViewKind::Ap),
        lp in cal(ViewKind::Lp),
        u in -200.0f64..200.0,
        v in -200.0f64..200.0,
    ) {
        if let Ok(out) = apply_drag(&s, &ap, Endpoint::Entry, Point2::new(u, v), &lp) {
            prop_assert_eq!(out.entry.y, s.entry.y);
            prop_assert_eq!(out.target, s.target);
            prop_assert!(close(lp.world_z(project(&out.entry, &lp).v), out.entry.z));
        }
        if let Ok(out) = apply_drag(&s, &lp, Endpoint::Target, Point2::new(u, v), &ap) {
            prop_assert_eq!(out.target.x, s.target.x);
            prop_assert_eq!(out.entry, s.entry);
        }
    }

    #[test]
    fn silhouette_area_is_length_times_width(s in screw(), c in cal(ViewKind::Lp)) {
        let a = project(&s.entry, &c);
        let b = project(&s.target, &c);
        let projected = (b.u - a.u).hypot(b.v - a.v);
        match cylinder_silhouette(&s, &c) {
            Ok(corners) => {
                let expected = projected * s.diameter / c.scale;
                let area = polygon_area(&corners);
                prop_assert!(area > 0.0, "corners not counter-clockwise");
                prop_assert!((area - expected).abs() <= 1e-9 * expected.max(1.0), "{area} vs {expected}");
            }
            Err(GeometryError::DegenerateProjection(_)) => prop_assert_eq!(projected, 0.0),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn sync_offset_is_antisymmetric(a in bbox(), b in bbox(), scale in 0.2f64..5.0, off in -200.0f64..200.0) {
        let ap = ViewCalibration::new(ViewKind::Ap, scale, off).unwrap();
        let lp = ViewCalibration::new(ViewKind::Lp, scale, off).unwrap();
        let d1 = sync_offset_from_pair(&a, &b, &ap, &lp);
        let d2 = sync_offset_from_pair(&b, &a, &ap, &lp);
        prop_assert!((d1 + d2).abs() <= 1e-9 * (1.0 + d1.abs()), "{d1} {d2}");
    }

    #[test]
    fn sync_offset_aligns_any_calibrations(a in bbox(), b in bbox(), ap in cal(ViewKind::Ap), mut lp in cal(ViewKind::Lp)) {
        lp.v_offset -= sync_offset_from_pair(&a, &b, &ap, &lp);
        let (za, zb) = (ap.world_z(a.center_v()), lp.world_z(b.center_v()));
        prop_assert!((za - zb).abs() <= 1e-9 * za.abs().max(1.0), "{za} {zb}");
    }
}
