//! The constant calculus: every derived quantity is an exact integer
//! function of its inputs, so runs are reproducible bit for bit.

use crate::{RhError, Result};

/// The geometric constants controlling detours, the language `L`, and the
/// fellow-traveling estimates.
///
/// `l1`, `l2`, `theta` and `a` follow fixed formulas in the hyperbolicity
/// constant `delta`, the cone-cardinality bound `m` and the fellow-traveling
/// constant `d`.  The local-to-global triple `(l, l1p, l2p)` has no canonical
/// closed form; a documented default is used and can be overridden as
/// configuration, subject to `l > l2p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeometryConstants {
    pub delta: u128,
    pub m: u128,
    pub d: u128,
    pub theta: u128,
    pub l1: u128,
    pub l2: u128,
    /// Local scale: paths are tested as `l`-local quasi-geodesics.
    pub l: u128,
    /// Global quasi-geodesic constants implied by the local test.
    pub l1p: u128,
    pub l2p: u128,
    /// Angle bound for the forbidden-window decomposition.
    pub a: u128,
    /// Canonical-representative scale for central triples.
    pub kappa: u128,
    /// Set when any field was overridden below its derived value; such runs
    /// are exact for the supplied constants but heuristic for the group.
    pub toy: bool,
}

impl GeometryConstants {
    /// Derive all constants from `delta`, the cone bound `m`, and the
    /// fellow-traveling constant `d`.
    pub fn derive(delta: u128, m: u128, d: u128) -> Result<GeometryConstants> {
        if delta == 0 || m == 0 || d == 0 {
            return Err(RhError::MalformedInput("delta, m and d must be positive".into()));
        }
        let l1 = 10_000 * delta * m;
        let l2 = 1_000_000 * delta * delta * m;
        let theta = 10_000 * (d + 60 * delta);
        // default local-to-global triple: double the local constants and put
        // the window just beyond l2p
        let l1p = 2 * l1;
        let l2p = 2 * l2;
        let l = 2 * l2p + 1;
        let a = 2 * (l + theta) * (l + theta);
        let kappa = 100_000 * delta;
        Ok(GeometryConstants { delta, m, d, theta, l1, l2, l, l1p, l2p, a, kappa, toy: false })
    }

    /// Replace the local-to-global triple; the window scale must stay above
    /// the global additive constant.
    pub fn with_local_to_global(mut self, l: u128, l1p: u128, l2p: u128) -> Result<GeometryConstants> {
        if l <= l2p {
            return Err(RhError::MalformedInput("local scale l must exceed l2'".into()));
        }
        let derived = (self.l, self.l1p, self.l2p);
        self.l = l;
        self.l1p = l1p;
        self.l2p = l2p;
        self.a = 2 * (l + self.theta) * (l + self.theta);
        if (l, l1p, l2p) < derived {
            self.toy = true;
        }
        Ok(self)
    }

    /// Small constants for desk-scale runs; results are exact for these
    /// values but heuristic for the true group.  Requires `l > l2p`.
    pub fn toy(l1: u128, l2: u128, l: u128, theta: u128, a: u128) -> Result<GeometryConstants> {
        let l1p = l1;
        let l2p = l2;
        if l <= l2p {
            return Err(RhError::MalformedInput("local scale l must exceed l2'".into()));
        }
        Ok(GeometryConstants {
            delta: 1,
            m: 1,
            d: 1,
            theta,
            l1,
            l2,
            l,
            l1p,
            l2p,
            a,
            kappa: 1,
            toy: true,
        })
    }

    /// Interior-letter sector bound of a `mu`-small detour: `5·mu·(mu+theta)`.
    pub fn small_detour_bound(&self, mu: u128) -> u128 {
        5 * mu * (mu + self.theta)
    }
}

/// Fellow-traveling radius for constrained quasi-geodesics:
/// `4(ε + λ(3ε+μ) + λ(3ε+μ)·(λ(3ε+μ)+χ)) + 50δ`.
pub fn epsilon_prime(delta: u128, eps: u128, lambda: u128, mu: u128, chi: u128) -> u128 {
    let t = lambda * (3 * eps + mu);
    4 * (eps + t + t * (t + chi)) + 50 * delta
}

/// Step-7 ratio test of the recognition loop: is `area/len > sqrt(k)/600`?
/// Evaluated exactly as `(600·area)² > k·len²`.
pub fn ratio_exceeds(area: u128, len: u128, k: u128) -> bool {
    let lhs = 600 * area;
    lhs * lhs > k * len * len
}

/// The area window `[k/2, 240k]` consulted by the recognition loop,
/// evaluated exactly as `2·area ≥ k` and `area ≤ 240·k`.
pub fn in_area_window(area: u128, k: u128) -> bool {
    2 * area >= k && area <= 240 * k
}

/// Diagram-size cap of the recognition loop at parameter `k`.
pub fn diagram_cap(k: u128) -> u128 {
    240 * k
}

/// Length cap (in alphabet letters) for the vocabulary products at `k`.
pub fn vocabulary_product_cap(k: u128) -> u128 {
    3 * 240 * k
}

/// Length cap for trivial factor words at `k`.
pub fn trivial_word_cap(k: u128) -> u128 {
    240 * k + 2
}
