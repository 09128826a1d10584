//! Exact probability spaces: rational and algebraic masses, TI/BID/explicit
//! PDBs, world enumeration, push-forward, conditioning, sampling, moments.

mod distribution;
mod enumerate;
mod family;
mod mass;
mod moments;
mod pdb;
mod powprob;
mod prob;
mod sample;

pub use distribution::{
    condition_distribution, distributions_equal, distributions_equal_at, pushforward, CondError,
    Distribution, Equality, ExplicitPdb,
};
pub(crate) use distribution::normalize as normalize_masses;
pub use enumerate::{enumerate_worlds, map_bid_worlds, map_ti_worlds};
pub use family::{FactFamily, ParamKind, Template, Truncation, DEFAULT_PARAMETRIC_WINDOW};
pub use mass::{Comparison, Mass, Radical, DEFAULT_PRECISION};
pub use moments::{moment, size_distribution, MomentReport, Tail};
pub use pdb::{bid_new, infer_schema, ti_new, BidPdb, Pdb, PdbError, TiPdb, WorldFamily, ENUMERATION_GUARD_BITS};
pub use powprob::{Marginal, PowProb, PowProbError};
pub use prob::{format_rational, parse_rational, ratio, rational_to_f64, Prob, ProbError};
pub use sample::sample;
