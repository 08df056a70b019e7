//! Crate-wide error and the short tags used in diagnostics and scan rows.

use crate::arith::ArithError;
use crate::cf::CfError;
use crate::comb::CombError;
use crate::germs::GermError;
use crate::io::IoError;
use crate::linearize::LinError;
use crate::renorm::RenormError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Germ(#[from] GermError),
    #[error(transparent)]
    Lin(#[from] LinError),
    #[error(transparent)]
    Renorm(#[from] RenormError),
    #[error(transparent)]
    Comb(#[from] CombError),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl Error {
    /// `module.variant`, e.g. `lin.small_divisor_blowup`.
    pub fn tag(&self) -> String {
        match self {
            Error::Cf(e) => format!("cf.{}", e.tag()),
            Error::Arith(e) => format!("arith.{}", e.tag()),
            Error::Germ(e) => format!("germs.{}", e.tag()),
            Error::Lin(e) => format!("lin.{}", e.tag()),
            Error::Renorm(e) => format!("renorm.{}", e.tag()),
            Error::Comb(e) => format!("comb.{}", e.tag()),
            Error::Io(e) => format!("io.{}", e.tag()),
        }
    }
}

impl CfError {
    pub fn tag(&self) -> &'static str {
        match self {
            CfError::ZeroDenominator => "zero_denominator",
            CfError::NotIrrational(_) => "not_irrational",
            CfError::FieldMismatch(..) => "field_mismatch",
            CfError::InvalidExpansion(_) => "invalid_expansion",
            CfError::TooShort { .. } => "too_short",
            CfError::InvalidTail(_) => "invalid_tail",
            CfError::Parse(_) => "parse",
        }
    }
}

impl ArithError {
    pub fn tag(&self) -> &'static str {
        match self {
            ArithError::Domain(_) => "domain",
        }
    }
}

impl GermError {
    pub fn tag(&self) -> &'static str {
        match self {
            GermError::Domain(_) => "domain",
            GermError::Factorization { .. } => "factorization",
            GermError::Record(_) => "record",
        }
    }
}

impl LinError {
    pub fn tag(&self) -> &'static str {
        match self {
            LinError::SmallDivisorBlowup { .. } => "small_divisor_blowup",
            LinError::OverflowGuard { .. } => "overflow_guard",
            LinError::DegenerateWindow => "degenerate_window",
            LinError::BadWindow { .. } => "bad_window",
            LinError::RadiusTooLarge { .. } => "radius_too_large",
            LinError::NoValidRadius => "no_valid_radius",
        }
    }
}

impl RenormError {
    pub fn tag(&self) -> &'static str {
        match self {
            RenormError::InsufficientDepth { .. } => "insufficient_depth",
            RenormError::ZeroBeta => "zero_beta",
            RenormError::AlphaMismatch { .. } => "alpha_mismatch",
            RenormError::TooManyIterates(_) => "too_many_iterates",
            RenormError::NoAdmissibleHeight { .. } => "no_admissible_height",
            RenormError::ConditionsNeverMet { .. } => "conditions_never_met",
            RenormError::Undefined { .. } => "undefined",
            RenormError::NotInDomain => "not_in_domain",
            RenormError::BudgetExceeded { .. } => "budget_exceeded",
            RenormError::Domain(_) => "domain",
        }
    }
}

impl CombError {
    pub fn tag(&self) -> &'static str {
        match self {
            CombError::TargetAboveRadius { .. } => "target_above_radius",
            CombError::StageFailed { .. } => "stage_failed",
            CombError::FamilyUnsuitable(_) => "family_unsuitable",
            CombError::Input(_) => "input",
            CombError::Pool(_) => "pool",
            CombError::Cf(e) => e.tag(),
            CombError::Lin(e) => e.tag(),
            CombError::Arith(e) => e.tag(),
        }
    }
}

impl IoError {
    pub fn tag(&self) -> &'static str {
        match self {
            IoError::SchemaMismatch { .. } => "schema_mismatch",
            IoError::UnsupportedVersion { .. } => "unsupported_version",
            IoError::Parse(_) => "parse",
            IoError::Config(_) => "config",
            IoError::Io(_) => "io",
        }
    }
}
