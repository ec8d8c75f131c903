use thiserror::Error;

use crate::model::NodeId;

/// Structural problems with a route. Infeasibility is never reported
/// through this type; see [`crate::model::RouteEval`] for that.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("route must start and end at the depot")]
    Endpoints,
    #[error("depot visited in the interior of the route at position {0}")]
    InteriorDepot(usize),
    #[error("customer {0} appears more than once in the route")]
    DuplicateCustomer(NodeId),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("charge vector has {charges} entries for {visits} visits")]
    ChargeLength { visits: usize, charges: usize },
    #[error("charge {amount} given at position {position}, which is not a station")]
    ChargeAtNonStation { position: usize, amount: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("instance has no depot")]
    NoDepot,
    #[error("node {index} has id {id}; nodes must be numbered 0..n in order")]
    NodeOrder { index: usize, id: NodeId },
    #[error("node {0} has the wrong kind for its position (depot, customers, then stations)")]
    NodeKind(NodeId),
    #[error("{name} matrix is {rows}x{cols}, expected {expected}x{expected}")]
    MatrixShape {
        name: &'static str,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("{name} matrix entry ({i},{j}) = {value} is invalid")]
    MatrixEntry {
        name: &'static str,
        i: usize,
        j: usize,
        value: f64,
    },
    #[error("parameter {name} = {value} is out of range")]
    Parameter { name: &'static str, value: f64 },
    #[error("node {id}: {reason}")]
    NodeAttribute { id: NodeId, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChargeError {
    #[error("segment needs {needed} energy at node {station} but only {available} can be charged")]
    InfeasibleSegment {
        station: NodeId,
        needed: f64,
        available: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreprocessError {
    #[error("latitude {0} is outside (-90, 90)")]
    Latitude(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("customer {0} cannot be served by a dedicated vehicle, even with charging stations")]
    UnservableCustomer(NodeId),
}
