//! Biplanar pedicle-screw planning.
//!
//! Vertebrae are detected as boxes on an anterior-posterior (AP) and a
//! lateral (LP) radiograph. An operator names vertebrae by clicking their
//! boxes, places screws modelled as cylinders between an entry and a target
//! point, and drags those points in either image. Both images share the
//! spine axis, so an edit in one view moves the screw consistently in the
//! other. The finished placement is exported as a plan document.
//!
//! - [`geometry`]: world/image coordinates, projection, drags, silhouettes
//! - [`bbox`]: detection boxes, the box file format, click hit-testing
//! - [`labels`]: vertebra catalog and the per-view label map
//! - [`orientation`]: quarter-turn and mirror corrections of a view
//! - [`session`]: the planning state and its operations
//! - [`plan`] / [`persist`]: plan documents and session files
//! - [`script`]: headless, line-oriented planning scripts
//!
//! A narrative guide with worked examples lives in the `book/` directory.

pub mod bbox;
pub mod geometry;
pub mod labels;
pub mod orientation;
pub mod persist;
pub mod plan;
pub mod script;
pub mod session;

pub use bbox::{hit_test, parse_bbox_file, serialize_bbox_file, BBox, ParseError};
pub use geometry::{
    apply_drag, cylinder_silhouette, project, screw_length, sync_offset_from_pair, Endpoint,
    GeometryError, Point2, Point3, Screw, ScrewId, Side, ViewCalibration, ViewKind,
};
pub use labels::{LabelMap, Labeled, VertebraLabel};
pub use orientation::{Orientation, Rotation};
pub use persist::{load_session, save_session, SESSION_FORMAT};
pub use plan::{export_plan, PlanDocument, PLAN_FORMAT};
pub use session::{ImageMeta, Placement, Session, SessionError, ViewState};
