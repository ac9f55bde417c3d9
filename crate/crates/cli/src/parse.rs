//! Value grammars for `--f`, `--relax`, `--cap` and `--strategies`.

use relaxvol::{BoundPair, Cap, ConvexFunctionSpec, RankingStrategy, RelaxationSpec};

/// A function flag before bounds are known. Envelopes are built on `[l, u]`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionFlag {
    Plain(String),
    Envelope(String),
}

impl FunctionFlag {
    pub fn resolve(&self, bounds: &BoundPair) -> Result<ConvexFunctionSpec, String> {
        match self {
            FunctionFlag::Plain(s) => plain_function(s),
            FunctionFlag::Envelope(s) => plain_function(s)?
                .build_envelope(bounds)
                .map_err(|e| e.to_string()),
        }
    }
}

/// `power:P`, `exp:B[:A]` (B may be `e`; A defaults to -1 so f(0) = 0), or
/// `envelope(<power or exp>)`.
pub fn function_flag(s: &str) -> Result<FunctionFlag, String> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix("envelope(").and_then(|r| r.strip_suffix(')')) {
        plain_function(inner)?;
        return Ok(FunctionFlag::Envelope(inner.trim().to_string()));
    }
    plain_function(s)?;
    Ok(FunctionFlag::Plain(s.to_string()))
}

fn plain_function(s: &str) -> Result<ConvexFunctionSpec, String> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let built = match parts.as_slice() {
        ["power", p] => ConvexFunctionSpec::power(number(p)?),
        ["exp", b] => ConvexFunctionSpec::exponential(base(b)?, -1.0),
        ["exp", b, a] => ConvexFunctionSpec::exponential(base(b)?, number(a)?),
        _ => return Err(format!("expected power:P, exp:B[:A] or envelope(...), got '{s}'")),
    };
    built.map_err(|e| e.to_string())
}

fn base(s: &str) -> Result<f64, String> {
    if s.trim() == "e" {
        Ok(std::f64::consts::E)
    } else {
        number(s)
    }
}

pub fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: '{s}'"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not a finite number: '{s}'"))
    }
}

/// Relaxation body without its cap: `perspective`, `naive`, `piecewise` or `q:Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelaxFlag {
    Perspective,
    Naive,
    Piecewise,
    Power(f64),
}

impl RelaxFlag {
    pub fn with_cap(self, cap: Cap) -> RelaxationSpec {
        match self {
            RelaxFlag::Perspective => RelaxationSpec::perspective(cap),
            RelaxFlag::Naive => RelaxationSpec::naive(cap),
            RelaxFlag::Piecewise => RelaxationSpec::piecewise(cap),
            RelaxFlag::Power(q) => RelaxationSpec::power(q, cap),
        }
    }

    pub fn label(&self) -> String {
        match self {
            RelaxFlag::Perspective => "perspective".into(),
            RelaxFlag::Naive => "naive".into(),
            RelaxFlag::Piecewise => "piecewise".into(),
            RelaxFlag::Power(q) => format!("q:{q}"),
        }
    }
}

pub fn relax_flag(s: &str) -> Result<RelaxFlag, String> {
    match s.trim() {
        "perspective" => Ok(RelaxFlag::Perspective),
        "naive" => Ok(RelaxFlag::Naive),
        "piecewise" => Ok(RelaxFlag::Piecewise),
        other => match other.strip_prefix("q:") {
            Some(q) => Ok(RelaxFlag::Power(number(q)?)),
            None => Err(format!("expected perspective, naive, piecewise or q:Q, got '{s}'")),
        },
    }
}

pub fn cap_flag(s: &str) -> Result<Cap, String> {
    match s.trim() {
        "secant" => Ok(Cap::Secant),
        "simple" => Ok(Cap::SimpleBound),
        _ => Err(format!("expected secant or simple, got '{s}'")),
    }
}

pub fn cap_label(cap: Cap) -> &'static str {
    match cap {
        Cap::Secant => "secant",
        Cap::SimpleBound => "simple",
    }
}

pub fn strategy(s: &str, seed: u64) -> Result<RankingStrategy, String> {
    match s.trim() {
        "desc" => Ok(RankingStrategy::DescendingVolDiff),
        "asc" => Ok(RankingStrategy::AscendingVolDiff),
        "random" => Ok(RankingStrategy::Random { seed }),
        "root" => Ok(RankingStrategy::DescendingRootDiff),
        _ => Err(format!("unknown strategy '{s}' (desc, asc, random, root)")),
    }
}

pub fn strategy_list(s: &str, seed: u64) -> Result<Vec<RankingStrategy>, String> {
    let list = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| strategy(t, seed))
        .collect::<Result<Vec<_>, _>>()?;
    if list.is_empty() {
        return Err("no strategies given".into());
    }
    Ok(list)
}
