//! Hybrid memetic search for the electric vehicle routing problem with
//! time windows, simultaneous pickup and delivery, and partial recharging.

pub mod cdns;
pub mod charge;
pub mod construct;
pub mod decompose;
pub mod error;
pub mod feasibility;
pub mod hma;
pub mod io;
pub mod model;
pub mod moves;
pub mod preprocess;
pub mod pssi;

pub use error::{ChargeError, InstanceError, PreprocessError, RouteError, SolveError};
pub use feasibility::{check_feasibility, FeasibilityReport, Violation};
pub use model::{
    evaluate_route, route_cost, strip_stations, total_cost, Constraint, CoordMode, Instance,
    Matrix, Node, NodeId, NodeKind, Route, RouteEval, Solution, EPS,
};
pub use preprocess::{hyperarc_closure, mercator_project, rank_stations, HyperArcMap, StationRanking};
