use thiserror::Error;

/// Structural errors raised while building or parsing a network.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrnError {
    #[error("reaction has no reactants (violates AtLeastOneReactant)")]
    EmptyReactants,
    #[error("reactants equal products (violates ReactantsDifferentThanProducts)")]
    ReactantsEqualProducts,
    #[error("reaction {index} duplicates an earlier reaction (violates UniqueReactions)")]
    DuplicateReaction { index: usize },
    #[error("species {species} occurs in no reaction (violates AllSpeciesUsed)")]
    UnusedSpecies { species: usize },
    #[error("network has no species")]
    NoSpecies,
    #[error("species index {species} out of range (species count {count})")]
    SpeciesOutOfRange { species: usize, count: usize },
    #[error("reaction index {index} out of range (reaction count {count})")]
    ReactionOutOfRange { index: usize, count: usize },
    #[error("expected {expected} species names, got {got}")]
    NameCount { expected: usize, got: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<CrnError>,
    },
    #[error("operation requires an elementary network")]
    NotElementary,
}
