use crate::{LeafId, NodeId, VarId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("invalid rational literal {0:?}")]
    BadRational(String),
    #[error("variable {0} has an empty domain")]
    EmptyDomain(VarId),
    #[error("variable {0} has a repeated domain value {1}")]
    DuplicateDomainValue(VarId, String),
    #[error("node {node} references node {child}, which does not exist")]
    DanglingNode { node: NodeId, child: NodeId },
    #[error("node {node} references node {child}, which is not strictly earlier (cycle or ordering violation)")]
    Ordering { node: NodeId, child: NodeId },
    #[error("node {node} references unknown leaf function {leaf}")]
    DanglingLeaf { node: NodeId, leaf: LeafId },
    #[error("leaf function {leaf} references unknown variable {var}")]
    DanglingVariable { leaf: LeafId, var: VarId },
    #[error("leaf function {leaf} table does not match the domain of variable {var}: {detail}")]
    TableMismatch { leaf: LeafId, var: VarId, detail: String },
    #[error("{0} is negative but the circuit is not flagged extended")]
    NotMonotone(String),
    #[error("node {0} has no children")]
    NoChildren(NodeId),
    #[error("node {0} is not the root but has no parents (more than one output node)")]
    ExtraOutput(NodeId),
    #[error("root {0} is invalid: {1}")]
    BadRoot(NodeId, String),
    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("unknown variable {0}")]
    UnknownVariable(VarId),
    #[error("no value supplied for variable {0}")]
    MissingVariable(VarId),
    #[error("value {value} is outside the domain of variable {var}")]
    ValueOutsideDomain { var: VarId, value: String },

    #[error("polynomial expansion exceeded the cap of {0} monomials")]
    TermExplosion(usize),
    #[error("polynomial is not multilinear")]
    NotMultilinear,
    #[error("leaf function {0} has no variable group")]
    Ungrouped(LeafId),
    #[error("identity test over {0} variables exceeds the limit of {1}")]
    TooManyVariables(usize, usize),

    #[error("extended circuits are not accepted by this analysis")]
    ExtendedRejected,
    #[error("circuit computes the zero polynomial (root eliminated while pruning)")]
    ZeroCircuit,
    #[error("variable {0} is trivial (domain has fewer than two values)")]
    TrivialVariable(VarId),
    #[error("circuit is degenerate (zero weights or constants present); prune it first")]
    Degenerate,
    #[error("audit failed: {0}")]
    AuditMismatch(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("empty clause list")]
    EmptyCnf,
    #[error("DIMACS parse error at line {line}: {msg}")]
    Dimacs { line: usize, msg: String },

    #[error("circuit is not decomposable and complete; marginal semantics are not guaranteed")]
    InvalidSpn,
    #[error("malformed marginal query: {0}")]
    BadQuery(String),
    #[error("partition function is zero")]
    ZeroPartition,
    #[error("node {0} has zero normalizing constant")]
    ZeroSumNode(NodeId),
    #[error("circuit is not weight-normalized")]
    NotNormalized,
    #[error("variable {0} assigned twice while sampling")]
    DoubleAssignment(VarId),
    #[error("root dependency-scope does not cover every declared variable")]
    IncompleteScope,

    #[error("machine definition invalid: {0}")]
    BadMachine(String),
    #[error("EQUAL needs an even, positive input count; got {0}")]
    OddEqual(usize),

    #[error("partition invalid: {0}")]
    BadPartition(String),
    #[error("variable {0} does not have a binary domain")]
    NotBinary(VarId),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("no balanced node found on the scope walk (circuit is not D&C?)")]
    NoBalancedNode,
    #[error("decomposition precondition violated: {0}")]
    DecompositionPrecondition(String),

    #[error("assignment has length {got}, expected {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("edges {0:?} do not form a dichromatic triangle")]
    NotDichromatic([usize; 3]),
    #[error("invalid edge label {0}")]
    BadEdge(usize),
    #[error("the complete graph needs at least one vertex")]
    NoVertices,
}
