use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::complex::norm2;
use crate::error::{check_dim, IzoError, Result};

type ProjectFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type MemberFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
/// Membership test accepted by [`FeasibleSet::custom`].
pub type MembershipTest = Box<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Closed convex set onto which iterates are projected.
#[derive(Clone)]
pub enum FeasibleSet {
    WholeSpace,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Custom { project: ProjectFn, contains: Option<MemberFn> },
}

impl fmt::Debug for FeasibleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WholeSpace => write!(f, "WholeSpace"),
            Self::Ball { center, radius } => write!(f, "Ball {{ center: {center:?}, radius: {radius} }}"),
            Self::Box { lower, upper } => write!(f, "Box {{ lower: {lower:?}, upper: {upper:?} }}"),
            Self::Custom { contains, .. } => write!(f, "Custom {{ membership: {} }}", contains.is_some()),
        }
    }
}

impl FeasibleSet {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(IzoError::Construction(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self::Ball { center, radius })
    }

    /// Ball of the given radius about the origin of `R^n`.
    pub fn centered_ball(n: usize, radius: f64) -> Result<Self> {
        Self::ball(vec![0.0; n], radius)
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len(), "box bounds")?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(IzoError::Construction("box requires lower <= upper".into()));
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn custom(
        project: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        contains: Option<MembershipTest>,
    ) -> Self {
        Self::Custom { project: Arc::new(project), contains: contains.map(Arc::from) }
    }

    /// Membership with a relative tolerance for rounding on the boundary.
    /// Sets without a membership test accept every point.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::WholeSpace => true,
            Self::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                norm2(&d) <= radius * (1.0 + 1e-12)
            }
            Self::Box { lower, upper } => x.iter().zip(lower.iter().zip(upper)).all(|(v, (l, u))| *v >= *l && *v <= *u),
            Self::Custom { contains, .. } => contains.as_ref().is_none_or(|c| c(x)),
        }
    }

    /// Euclidean projection (for ball and box), or the user map for custom
    /// sets, whose output is checked against the membership test if present.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::WholeSpace => Ok(x.to_vec()),
            Self::Ball { center, radius } => {
                check_dim(center.len(), x.len(), "ball projection")?;
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let r = norm2(&d);
                if r <= radius * (1.0 + 1e-12) {
                    return Ok(x.to_vec());
                }
                let s = radius / r;
                Ok(center.iter().zip(&d).map(|(c, di)| c + s * di).collect())
            }
            Self::Box { lower, upper } => {
                check_dim(lower.len(), x.len(), "box projection")?;
                Ok(x.iter().zip(lower.iter().zip(upper)).map(|(v, (l, u))| v.clamp(*l, *u)).collect())
            }
            Self::Custom { project, contains } => {
                let y = project(x);
                check_dim(x.len(), y.len(), "custom projection")?;
                if let Some(c) = contains {
                    if !c(&y) {
                        return Err(IzoError::Contract("custom projection returned a non-member".into()));
                    }
                }
                Ok(y)
            }
        }
    }
}

/// Stepsize and smoothing regime of the descent loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    ScConstrained,
    ScUnconstrained,
    QuadConstrained,
    QuadUnconstrained,
    Nonconvex,
    /// Constant step `1/(n L1)` with `delta_k = delta / k`, a smoothing law
    /// that ignores the noise level. Used as a comparison arm.
    NonconvexFastDecay,
    OnlineQuadratic,
    AnytimeUnconstrained,
}

impl Regime {
    pub const ALL: [Regime; 8] = [
        Self::ScConstrained,
        Self::ScUnconstrained,
        Self::QuadConstrained,
        Self::QuadUnconstrained,
        Self::Nonconvex,
        Self::NonconvexFastDecay,
        Self::OnlineQuadratic,
        Self::AnytimeUnconstrained,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ScConstrained => "sc_constrained",
            Self::ScUnconstrained => "sc_unconstrained",
            Self::QuadConstrained => "quad_constrained",
            Self::QuadUnconstrained => "quad_unconstrained",
            Self::Nonconvex => "nonconvex",
            Self::NonconvexFastDecay => "nonconvex_fast_decay",
            Self::OnlineQuadratic => "online_quadratic",
            Self::AnytimeUnconstrained => "anytime_unconstrained",
        }
    }

    fn needs_tau(self) -> bool {
        !matches!(self, Self::Nonconvex | Self::NonconvexFastDecay)
    }

    fn needs_l1(self) -> bool {
        matches!(
            self,
            Self::ScUnconstrained
                | Self::QuadUnconstrained
                | Self::AnytimeUnconstrained
                | Self::Nonconvex
                | Self::NonconvexFastDecay
        )
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = IzoError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| IzoError::Config(format!("unknown schedule '{s}'")))
    }
}

/// Per-iteration stepsize `mu_k` and smoothing `delta_k`, `k >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub regime: Regime,
    pub tau: f64,
    pub l1: f64,
    pub n: usize,
    pub delta: f64,
    pub k_total: usize,
    /// Warm-up length; zero for regimes without one.
    pub k0: usize,
}

/// Builds a schedule and validates its parameters.
pub fn make_schedule(regime: Regime, tau: f64, l1: f64, n: usize, delta: f64, k_total: usize) -> Result<Schedule> {
    if n == 0 {
        return Err(IzoError::Config("dimension must be >= 1".into()));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(IzoError::Config(format!("delta must be positive, got {delta}")));
    }
    if k_total == 0 {
        return Err(IzoError::Config("K must be >= 1".into()));
    }
    if regime.needs_tau() && (!(tau > 0.0) || !tau.is_finite()) {
        return Err(IzoError::Config(format!("{regime} requires tau > 0, got {tau}")));
    }
    if regime.needs_l1() && (!(l1 > 0.0) || !l1.is_finite()) {
        return Err(IzoError::Config(format!("{regime} requires L1 > 0, got {l1}")));
    }
    let nf = n as f64;
    let k0 = match regime {
        Regime::ScUnconstrained | Regime::AnytimeUnconstrained => (8.0 * nf * nf * l1 * l1 / (tau * tau)).floor(),
        Regime::QuadUnconstrained => (4.0 * nf * l1 * l1 / (tau * tau)).floor(),
        _ => 0.0,
    };
    if k0 >= usize::MAX as f64 {
        return Err(IzoError::Config(format!("warm-up length {k0:e} is not representable")));
    }
    let k0 = k0 as usize;
    if matches!(regime, Regime::ScUnconstrained | Regime::QuadUnconstrained) && k_total < 2 * k0 {
        return Err(IzoError::Config(format!(
            "{regime} requires K >= 2 K0 = {}, got K = {k_total} (K0 = {k0})",
            2 * k0
        )));
    }
    Ok(Schedule { regime, tau, l1, n, delta, k_total, k0 })
}

impl Schedule {
    /// Stepsize at iteration `k` (1-based).
    pub fn mu(&self, k: usize) -> f64 {
        let kf = k.max(1) as f64;
        let big_k = self.k_total as f64;
        let nf = self.n as f64;
        match self.regime {
            Regime::ScConstrained | Regime::QuadConstrained | Regime::OnlineQuadratic => 2.0 / (self.tau * kf),
            Regime::ScUnconstrained | Regime::QuadUnconstrained => {
                if k <= self.k0 {
                    1.0 / (self.tau * big_k)
                } else {
                    2.0 / (self.tau * kf)
                }
            }
            Regime::AnytimeUnconstrained => 1.0 / (self.tau * (kf + 2.0 * self.k0 as f64)),
            Regime::Nonconvex => 1.0 / (nf * self.l1 * kf.powf(2.0 / 3.0)),
            Regime::NonconvexFastDecay => 1.0 / (nf * self.l1),
        }
    }

    /// Smoothing parameter at iteration `k` (1-based).
    pub fn delta(&self, k: usize) -> f64 {
        let kf = k.max(1) as f64;
        match self.regime {
            Regime::QuadConstrained | Regime::QuadUnconstrained | Regime::OnlineQuadratic => self.delta,
            Regime::ScUnconstrained if k <= self.k0 => self.delta * (self.k_total as f64).powf(-1.0 / 6.0),
            Regime::NonconvexFastDecay => self.delta / kf,
            _ => self.delta * kf.powf(-1.0 / 6.0),
        }
    }

    /// The same law with a different strong-convexity modulus. The warm-up
    /// length is kept.
    pub fn with_tau(&self, tau: f64) -> Result<Schedule> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(IzoError::Config(format!("tau must be positive, got {tau}")));
        }
        Ok(Schedule { tau, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        let b = FeasibleSet::centered_ball(2, 1.0).unwrap();
        assert_eq!(b.project(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let b6 = FeasibleSet::centered_ball(2, 6.0).unwrap();
        assert_eq!(b6.project(&[1.0, -2.5]).unwrap(), vec![1.0, -2.5]);
        let bx = FeasibleSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(bx.project(&[-1.0, 0.5]).unwrap(), vec![0.0, 0.5]);
        assert!(FeasibleSet::centered_ball(2, 0.0).is_err());
        assert!(FeasibleSet::boxed(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn custom_contract() {
        let bad =
            FeasibleSet::custom(|x| x.iter().map(|v| v + 10.0).collect(), Some(Box::new(|x: &[f64]| x[0] <= 1.0)));
        assert!(matches!(bad.project(&[0.0]), Err(IzoError::Contract(_))));
        let halfline =
            FeasibleSet::custom(|x| x.iter().map(|v| v.max(0.0)).collect(), Some(Box::new(|x: &[f64]| x[0] >= 0.0)));
        assert_eq!(halfline.project(&[-3.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn warmup_lengths() {
        let s = make_schedule(Regime::ScUnconstrained, 1.0, 1.0, 10, 0.1, 1600).unwrap();
        assert_eq!(s.k0, 800);
        let q = make_schedule(Regime::QuadUnconstrained, 1.0, 1.0, 10, 0.1, 80).unwrap();
        assert_eq!(q.k0, 40);
        match make_schedule(Regime::ScUnconstrained, 1.0, 1.0, 10, 0.1, 1599) {
            Err(IzoError::Config(msg)) => assert!(msg.contains("800"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn stepsize_laws() {
        let s = make_schedule(Regime::ScConstrained, 2.0, 0.0, 3, 0.4, 100).unwrap();
        assert_eq!(s.mu(1), 1.0);
        assert_eq!(s.delta(1), 0.4);
        assert!((s.delta(64) - 0.4 / 2.0).abs() < 1e-15);

        let q = make_schedule(Regime::QuadConstrained, 1.0, 0.0, 3, 0.4, 100).unwrap();
        assert_eq!(q.delta(57), 0.4);

        let u = make_schedule(Regime::ScUnconstrained, 1.0, 1.0, 1, 1.0, 64).unwrap();
        assert_eq!(u.k0, 8);
        assert_eq!(u.mu(8), 1.0 / 64.0);
        assert_eq!(u.delta(8), 0.5);
        assert_eq!(u.mu(9), 2.0 / 9.0);

        let nc = make_schedule(Regime::Nonconvex, 0.0, 2.0, 2, 1e-6, 10).unwrap();
        assert!((nc.mu(8) - 1.0 / (2.0 * 2.0 * 4.0)).abs() < 1e-15);

        let a = make_schedule(Regime::AnytimeUnconstrained, 1.0, 1.0, 1, 1.0, 1).unwrap();
        assert_eq!(a.mu(4), 1.0 / 20.0);
    }

    #[test]
    fn schedule_invariants() {
        for regime in Regime::ALL {
            let k_total = 5000;
            let s = make_schedule(regime, 1.0, 0.5, 3, 0.1, k_total).unwrap();
            for k in 1..=k_total {
                assert!(s.mu(k) > 0.0);
                let d = s.delta(k);
                assert!(d > 0.0 && d <= s.delta, "{regime} at {k}");
            }
            assert_eq!(regime.as_str().parse::<Regime>().unwrap(), regime);
        }
        assert!(make_schedule(Regime::ScConstrained, 0.0, 1.0, 3, 0.1, 10).is_err());
        assert!(make_schedule(Regime::Nonconvex, 1.0, 0.0, 3, 0.1, 10).is_err());
        assert!(make_schedule(Regime::QuadConstrained, 1.0, 1.0, 3, -0.1, 10).is_err());
        assert!("adam".parse::<Regime>().is_err());
    }
}
