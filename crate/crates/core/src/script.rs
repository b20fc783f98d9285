//! Line-oriented planning scripts.
//!
//! A script replays a planning session headlessly, one command per line:
//!
//! ```text
//! session <id>
//! images <ap-ref> <ap-width> <ap-height> <lp-ref> <lp-width> <lp-height>
//! calibrate <ap|lp> <mm-per-px> <v-offset>
//! orient <ap|lp> <0|90|180|270> [flip]
//! attach <ap|lp> <bbox-file>
//! label <ap|lp> <u> <v> <vertebra>
//! add-screw <vertebra> <left|right>
//! move <vertebra> <left|right> <ap|lp> <entry|target> <u> <v>
//! params <vertebra> <left|right> [diameter=<mm>] [type=<name>]
//! export
//! ```
//!
//! Blank lines and `#` comments are ignored. Screws are addressed by vertebra
//! and side. The plan is exported after the last command; `export` in the
//! middle of a script only checks that a plan could be produced at that point.
//!
//! Execution goes through [`PlanTarget`], so the same script can drive an
//! in-process [`Session`] or a remote one.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::bbox::{parse_bbox_file, BBox};
use crate::geometry::{Endpoint, Point2, ScrewId, Side, ViewKind};
use crate::labels::VertebraLabel;
use crate::orientation::Rotation;
use crate::session::{ImageMeta, Session, SessionError};

pub const DEFAULT_SESSION_ID: &str = "plan";

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Session(String),
    Images { ap: ImageMeta, lp: ImageMeta },
    Calibrate { view: ViewKind, scale: f64, v_offset: f64 },
    Orient { view: ViewKind, rotation: Rotation, flip: bool },
    Attach { view: ViewKind, path: PathBuf },
    Label { view: ViewKind, at: Point2, label: VertebraLabel },
    AddScrew { label: VertebraLabel, side: Side },
    Move { label: VertebraLabel, side: Side, view: ViewKind, endpoint: Endpoint, to: Point2 },
    Params { label: VertebraLabel, side: Side, diameter: Option<f64>, screw_type: Option<String> },
    Export,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Session(_) => "session",
            Command::Images { .. } => "images",
            Command::Calibrate { .. } => "calibrate",
            Command::Orient { .. } => "orient",
            Command::Attach { .. } => "attach",
            Command::Label { .. } => "label",
            Command::AddScrew { .. } => "add-screw",
            Command::Move { .. } => "move",
            Command::Params { .. } => "params",
            Command::Export => "export",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptLine {
    /// 1-based source line.
    pub line: usize,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanScript {
    pub commands: Vec<ScriptLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("script line {line}: {message}")]
pub struct ScriptParseError {
    pub line: usize,
    pub message: String,
}

fn parse_num(token: &str) -> Result<f64, String> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("invalid number '{token}'"))
}

fn parse_int(token: &str) -> Result<i64, String> {
    token.parse::<i64>().map_err(|_| format!("invalid integer '{token}'"))
}

fn parse_label(token: &str) -> Result<VertebraLabel, String> {
    token.parse().map_err(|e: crate::labels::UnknownLabel| e.to_string())
}

fn expect_args(args: &[&str], n: usize, usage: &str) -> Result<(), String> {
    if args.len() == n {
        Ok(())
    } else {
        Err(format!("expected {n} arguments, usage: {usage}"))
    }
}

fn parse_command(tokens: &[&str]) -> Result<Command, String> {
    let (name, args) = tokens.split_first().expect("non-empty line");
    let cmd = match *name {
        "session" => {
            expect_args(args, 1, "session <id>")?;
            Command::Session(args[0].to_string())
        }
        "images" => {
            expect_args(args, 6, "images <ap-ref> <w> <h> <lp-ref> <w> <h>")?;
            Command::Images {
                ap: ImageMeta::new(args[0], parse_int(args[1])?, parse_int(args[2])?),
                lp: ImageMeta::new(args[3], parse_int(args[4])?, parse_int(args[5])?),
            }
        }
        "calibrate" => {
            expect_args(args, 3, "calibrate <view> <mm-per-px> <v-offset>")?;
            Command::Calibrate { view: args[0].parse()?, scale: parse_num(args[1])?, v_offset: parse_num(args[2])? }
        }
        "orient" => {
            let flip = match args.get(2) {
                None => false,
                Some(&"flip") => true,
                Some(other) => return Err(format!("unexpected '{other}', expected 'flip'")),
            };
            if !(2..=3).contains(&args.len()) {
                return Err("usage: orient <view> <degrees> [flip]".into());
            }
            let rotation = Rotation::from_degrees(parse_int(args[1])?)
                .ok_or_else(|| format!("rotation must be 0, 90, 180 or 270, got {}", args[1]))?;
            Command::Orient { view: args[0].parse()?, rotation, flip }
        }
        "attach" => {
            expect_args(args, 2, "attach <view> <bbox-file>")?;
            Command::Attach { view: args[0].parse()?, path: PathBuf::from(args[1]) }
        }
        "label" => {
            expect_args(args, 4, "label <view> <u> <v> <vertebra>")?;
            Command::Label {
                view: args[0].parse()?,
                at: Point2::new(parse_num(args[1])?, parse_num(args[2])?),
                label: parse_label(args[3])?,
            }
        }
        "add-screw" => {
            expect_args(args, 2, "add-screw <vertebra> <side>")?;
            Command::AddScrew { label: parse_label(args[0])?, side: args[1].parse()? }
        }
        "move" => {
            expect_args(args, 6, "move <vertebra> <side> <view> <endpoint> <u> <v>")?;
            Command::Move {
                label: parse_label(args[0])?,
                side: args[1].parse()?,
                view: args[2].parse()?,
                endpoint: args[3].parse()?,
                to: Point2::new(parse_num(args[4])?, parse_num(args[5])?),
            }
        }
        "params" => {
            if args.len() < 3 {
                return Err("usage: params <vertebra> <side> [diameter=<mm>] [type=<name>]".into());
            }
            let (mut diameter, mut screw_type) = (None, None);
            for kv in &args[2..] {
                match kv.split_once('=') {
                    Some(("diameter", v)) => diameter = Some(parse_num(v)?),
                    Some(("type", v)) => screw_type = Some(v.to_string()),
                    _ => return Err(format!("unknown parameter '{kv}'")),
                }
            }
            Command::Params { label: parse_label(args[0])?, side: args[1].parse()?, diameter, screw_type }
        }
        "export" => {
            expect_args(args, 0, "export")?;
            Command::Export
        }
        other => return Err(format!("unknown command '{other}'")),
    };
    Ok(cmd)
}

pub fn parse_script(text: &str) -> Result<PlanScript, ScriptParseError> {
    let mut commands = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let command = parse_command(&tokens).map_err(|message| ScriptParseError { line: idx + 1, message })?;
        commands.push(ScriptLine { line: idx + 1, command });
    }
    Ok(PlanScript { commands })
}

/// Error reported by a [`PlanTarget`]: a stable code plus a message.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{code}: {message}")]
pub struct TargetError {
    pub code: String,
    pub message: String,
}

impl TargetError {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self { code: code.into(), message: message.into() }
    }
}

impl From<SessionError> for TargetError {
    fn from(e: SessionError) -> Self {
        TargetError::new(e.code(), e.to_string())
    }
}

/// Something a script can drive: the session operations, addressed the way
/// a client sees them.
pub trait PlanTarget {
    fn create(&mut self, id: &str, ap: &ImageMeta, lp: &ImageMeta) -> Result<(), TargetError>;
    fn calibrate(&mut self, view: ViewKind, scale: f64, v_offset: f64) -> Result<(), TargetError>;
    fn orient(&mut self, view: ViewKind, rotation: Rotation, flip: bool) -> Result<(), TargetError>;
    fn attach(&mut self, view: ViewKind, boxes: Vec<BBox>) -> Result<(), TargetError>;
    fn label(&mut self, view: ViewKind, at: Point2, label: VertebraLabel) -> Result<(), TargetError>;
    fn add_screw(&mut self, label: VertebraLabel, side: Side) -> Result<ScrewId, TargetError>;
    fn move_endpoint(&mut self, id: ScrewId, view: ViewKind, endpoint: Endpoint, to: Point2) -> Result<(), TargetError>;
    fn set_params(&mut self, id: ScrewId, diameter: Option<f64>, screw_type: Option<String>) -> Result<(), TargetError>;
    /// Plan document text.
    fn export(&mut self) -> Result<String, TargetError>;
}

/// Runs scripts against a session held in memory.
#[derive(Debug, Default)]
pub struct LocalTarget {
    pub session: Option<Session>,
}

impl LocalTarget {
    pub fn new() -> Self {
        Self::default()
    }

    fn session(&mut self) -> Result<&mut Session, TargetError> {
        self.session
            .as_mut()
            .ok_or_else(|| TargetError::new("NO_SESSION", "no images selected yet"))
    }
}

impl PlanTarget for LocalTarget {
    fn create(&mut self, id: &str, ap: &ImageMeta, lp: &ImageMeta) -> Result<(), TargetError> {
        self.session = Some(Session::new(id, ap, lp)?);
        Ok(())
    }

    fn calibrate(&mut self, view: ViewKind, scale: f64, v_offset: f64) -> Result<(), TargetError> {
        Ok(self.session()?.set_calibration(view, scale, v_offset)?)
    }

    fn orient(&mut self, view: ViewKind, rotation: Rotation, flip: bool) -> Result<(), TargetError> {
        self.session()?.set_orientation(view, rotation, flip);
        Ok(())
    }

    fn attach(&mut self, view: ViewKind, boxes: Vec<BBox>) -> Result<(), TargetError> {
        Ok(self.session()?.attach_detections(view, boxes)?)
    }

    fn label(&mut self, view: ViewKind, at: Point2, label: VertebraLabel) -> Result<(), TargetError> {
        self.session()?.label_vertebra(view, at, label)?;
        Ok(())
    }

    fn add_screw(&mut self, label: VertebraLabel, side: Side) -> Result<ScrewId, TargetError> {
        Ok(self.session()?.add_screw(label, side)?.id)
    }

    fn move_endpoint(&mut self, id: ScrewId, view: ViewKind, endpoint: Endpoint, to: Point2) -> Result<(), TargetError> {
        self.session()?.move_endpoint(id, view, endpoint, to)?;
        Ok(())
    }

    fn set_params(&mut self, id: ScrewId, diameter: Option<f64>, screw_type: Option<String>) -> Result<(), TargetError> {
        self.session()?.set_screw_params(id, diameter, screw_type)?;
        Ok(())
    }

    fn export(&mut self) -> Result<String, TargetError> {
        match &self.session {
            Some(s) => Ok(s.export_plan()?.to_text()),
            None => Err(SessionError::EmptyPlan.into()),
        }
    }
}

/// Where a script stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandFailure {
    /// 1-based command index and source line; `None` for the final export.
    pub position: Option<(usize, usize)>,
    pub command: &'static str,
    pub error: TargetError,
}

impl fmt::Display for CommandFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.position {
            Some((index, line)) => write!(f, "command {index} (line {line}, {}): {}", self.command, self.error),
            None => write!(f, "final export: {}", self.error),
        }
    }
}

impl std::error::Error for CommandFailure {}

/// Executes `script` against `target` and returns the exported plan text.
/// Relative bbox paths resolve against `base_dir`.
pub fn run_script(script: &PlanScript, target: &mut dyn PlanTarget, base_dir: &Path) -> Result<String, CommandFailure> {
    let mut session_id = DEFAULT_SESSION_ID.to_string();
    let mut screws: HashMap<(VertebraLabel, Side), ScrewId> = HashMap::new();
    let lookup = |screws: &HashMap<_, ScrewId>, label: VertebraLabel, side: Side| {
        screws
            .get(&(label, side))
            .copied()
            .ok_or_else(|| TargetError::new("UNKNOWN_SCREW", format!("no {side} screw on {label} in this script")))
    };

    for (i, ScriptLine { line, command }) in script.commands.iter().enumerate() {
        let result: Result<(), TargetError> = match command {
            Command::Session(id) => {
                session_id = id.clone();
                Ok(())
            }
            Command::Images { ap, lp } => {
                screws.clear();
                target.create(&session_id, ap, lp)
            }
            Command::Calibrate { view, scale, v_offset } => target.calibrate(*view, *scale, *v_offset),
            Command::Orient { view, rotation, flip } => target.orient(*view, *rotation, *flip),
            Command::Attach { view, path } => {
                let full = base_dir.join(path);
                std::fs::read_to_string(&full)
                    .map_err(|e| TargetError::new("IO_ERROR", format!("{}: {e}", full.display())))
                    .and_then(|text| {
                        parse_bbox_file(&text)
                            .map_err(|e| TargetError::new("PARSE_ERROR", format!("{}: {e}", full.display())))
                    })
                    .and_then(|boxes| target.attach(*view, boxes))
            }
            Command::Label { view, at, label } => target.label(*view, *at, *label),
            Command::AddScrew { label, side } => target.add_screw(*label, *side).map(|id| {
                screws.insert((*label, *side), id);
            }),
            Command::Move { label, side, view, endpoint, to } => {
                lookup(&screws, *label, *side).and_then(|id| target.move_endpoint(id, *view, *endpoint, *to))
            }
            Command::Params { label, side, diameter, screw_type } => lookup(&screws, *label, *side)
                .and_then(|id| target.set_params(id, *diameter, screw_type.clone())),
            Command::Export => target.export().map(|_| ()),
        };
        result.map_err(|error| CommandFailure { position: Some((i + 1, *line)), command: command.name(), error })?;
    }
    target
        .export()
        .map_err(|error| CommandFailure { position: None, command: "export", error })
}
