//! Decoding of correlated shift pairs after an error-corrected two-qubit gate.
//!
//! The first mode sits on a rectangular lattice (aspect ratio `lambda`), the
//! second on the square lattice.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::gkp::{nearest_index, sqrt_pi};

/// Which correlated quadrature pair is being decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    /// CNOT position pair `(q1, q2)`.
    QQ,
    /// CNOT momentum pair `(p1, p2)`.
    PP,
    /// CZ pair `(q1, p2)`.
    QP,
    /// CZ pair `(p1, q2)`.
    PQ,
}

impl Sector {
    pub const ALL: [Sector; 4] = [Sector::QQ, Sector::PP, Sector::QP, Sector::PQ];

    /// Lattice spacings `(s1, s2)` of the two coordinates.
    pub fn spacings(self, lambda: f64) -> (f64, f64) {
        match self {
            Sector::QQ | Sector::QP => (sqrt_pi() * lambda, sqrt_pi()),
            Sector::PP | Sector::PQ => (sqrt_pi() / lambda, sqrt_pi()),
        }
    }

    /// Coefficients `(c11, c22, c12)` of the quadratic form
    /// `c11 x1^2 + c22 x2^2 + c12 x1 x2` that the decoder minimizes.
    pub fn form_coeffs(self, lambda: f64) -> (f64, f64, f64) {
        let il2 = 1.0 / (lambda * lambda);
        match self {
            Sector::QQ | Sector::QP => (2.0 + il2, 2.0, -2.0 / lambda),
            Sector::PP => (2.0, 2.0 + il2, 2.0 / lambda),
            Sector::PQ => (2.0, 2.0 + il2, -2.0 / lambda),
        }
    }

    #[inline]
    pub fn form(self, lambda: f64, x1: f64, x2: f64) -> f64 {
        let (a, b, c) = self.form_coeffs(lambda);
        a * x1 * x1 + b * x2 * x2 + c * x1 * x2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointShift {
    pub x1: f64,
    pub x2: f64,
    pub sector: Sector,
}

impl JointShift {
    pub fn new(sector: Sector, x1: f64, x2: f64) -> Self {
        Self { x1, x2, sector }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct DecodedIntegers {
    pub n1: i64,
    pub n2: i64,
}

impl DecodedIntegers {
    pub fn new(n1: i64, n2: i64) -> Self {
        Self { n1, n2 }
    }

    /// Parity class as `(n1 odd, n2 odd)`.
    pub fn parity(self) -> (bool, bool) {
        (self.n1.rem_euclid(2) == 1, self.n2.rem_euclid(2) == 1)
    }

    /// Residuals `x - n s` left after this decode.
    pub fn residual(self, shift: &JointShift, lambda: f64) -> (f64, f64) {
        let (s1, s2) = shift.sector.spacings(lambda);
        (shift.x1 - self.n1 as f64 * s1, shift.x2 - self.n2 as f64 * s2)
    }
}

/// Zero-mean bivariate Gaussian of one sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedDensity {
    pub lambda: f64,
    pub sigma: f64,
    pub sector: Sector,
    pub covariance: [[f64; 2]; 2],
}

impl CorrelatedDensity {
    pub fn new(sector: Sector, lambda: f64, sigma: f64) -> Self {
        let v = sigma * sigma;
        let wide = (2.0 + 1.0 / (lambda * lambda)) * v;
        let c = v / lambda;
        let covariance = match sector {
            Sector::QQ | Sector::QP => [[2.0 * v, c], [c, wide]],
            Sector::PP => [[wide, -c], [-c, 2.0 * v]],
            Sector::PQ => [[wide, c], [c, 2.0 * v]],
        };
        Self { lambda, sigma, sector, covariance }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.covariance;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Log of the density up to the normalization constant.
    #[inline]
    pub fn log_kernel(&self, x1: f64, x2: f64) -> f64 {
        let k = 4.0 + 1.0 / (self.lambda * self.lambda);
        -self.sector.form(self.lambda, x1, x2) / (2.0 * k * self.sigma * self.sigma)
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        let k = 4.0 + 1.0 / (self.lambda * self.lambda);
        let s2 = self.sigma * self.sigma;
        self.log_kernel(x1, x2).exp() / (2.0 * PI * (k * s2 * s2).sqrt())
    }
}

/// Closed-form joint density of a sector at `(x1, x2)`.
pub fn density(sector: Sector, lambda: f64, sigma: f64, x1: f64, x2: f64) -> f64 {
    CorrelatedDensity::new(sector, lambda, sigma).eval(x1, x2)
}

/// Rounds each coordinate independently to its own lattice.
pub fn decode_closest(shift: &JointShift, lambda: f64) -> DecodedIntegers {
    let (s1, s2) = shift.sector.spacings(lambda);
    DecodedIntegers::new(nearest_index(shift.x1, s1), nearest_index(shift.x2, s2))
}

/// Maximum-likelihood integer pair: the Voronoi cell of the sector's skewed
/// lattice metric containing the shift.
pub fn decode_ml(shift: &JointShift, lambda: f64) -> DecodedIntegers {
    match shift.sector {
        Sector::QQ | Sector::QP => decode_qq(shift.x1, shift.x2, lambda),
        Sector::PP => decode_pp(shift.x1, shift.x2, lambda),
        Sector::PQ => {
            // PQ's form is PP's with the second coordinate mirrored
            let d = decode_pp(shift.x1, -shift.x2, lambda);
            DecodedIntegers::new(d.n1, -d.n2)
        }
    }
}

fn decode_qq(q1: f64, q2: f64, lambda: f64) -> DecodedIntegers {
    let sp = sqrt_pi();
    let s1 = sp * lambda;
    let n1 = nearest_index(q1, s1);
    let n2 = nearest_index(q2, sp);
    let r1 = q1 - n1 as f64 * s1;
    let wide = (2.0 * lambda * lambda + 1.0) * sp / 2.0;
    let slope = 2.0 * lambda + 1.0 / lambda;

    let v1 = r1 / (2.0 * lambda) - sp / 2.0;
    let v2 = q2 - n2 as f64 * sp;
    let v3 = r1 / (2.0 * lambda) + sp / 2.0;
    let v4 = slope * r1 - wide;
    let v5 = slope * r1 + wide;
    let v6 = -2.0 * lambda * (q1 - (n1 - 1) as f64 * s1) + wide;
    let v7 = -2.0 * lambda * (q1 - (n1 + 1) as f64 * s1) - wide;

    let (d1, d2) = if v1 < v2 && v2 < v3 {
        if v4 < v2 && v2 < v5 {
            (0, 0)
        } else if v2 >= v5 {
            (-1, 0)
        } else {
            (1, 0)
        }
    } else if v2 >= v3 {
        if v2 > v6 { (0, 1) } else { (-1, 0) }
    } else if v2 > v7 {
        (1, 0)
    } else {
        (0, -1)
    };
    DecodedIntegers::new(n1 + d1, n2 + d2)
}

fn decode_pp(p1: f64, p2: f64, lambda: f64) -> DecodedIntegers {
    let sp = sqrt_pi();
    let s1 = sp / lambda;
    let n1 = nearest_index(p1, s1);
    let n2 = nearest_index(p2, sp);
    let r1 = p1 - n1 as f64 * s1;
    let l2 = lambda * lambda;
    let shallow = lambda / (2.0 * l2 + 1.0);
    let wide = (2.0 * l2 + 1.0) * sp / (4.0 * l2);

    let v1 = -shallow * r1 - sp / 2.0;
    let v2 = p2 - n2 as f64 * sp;
    let v3 = -shallow * r1 + sp / 2.0;
    let v4 = -2.0 * lambda * r1 - sp;
    let v5 = -2.0 * lambda * r1 + sp;
    let v6 = (p1 - (n1 + 1) as f64 * s1) / (2.0 * lambda) + wide;
    let v7 = (p1 - (n1 - 1) as f64 * s1) / (2.0 * lambda) - wide;

    let (d1, d2) = if v1 < v2 && v2 < v3 {
        if v4 < v2 && v2 < v5 {
            (0, 0)
        } else if v2 >= v5 {
            (1, 0)
        } else {
            (-1, 0)
        }
    } else if v2 >= v3 {
        if v2 > v6 { (0, 1) } else { (1, 0) }
    } else if v2 > v7 {
        (-1, 0)
    } else {
        (0, -1)
    };
    DecodedIntegers::new(n1 + d1, n2 + d2)
}

/// Exhaustive argmin of the sector form over `[-window, window]^2`; ties go
/// to the lexicographically first `(n1, n2)`.
pub fn brute_force_oracle(shift: &JointShift, lambda: f64, window: i64) -> DecodedIntegers {
    brute_force_with_gap(shift, lambda, window).0
}

/// Oracle argmin together with the form gap to the runner-up translate.
pub fn brute_force_with_gap(shift: &JointShift, lambda: f64, window: i64) -> (DecodedIntegers, f64) {
    let (s1, s2) = shift.sector.spacings(lambda);
    let mut best = (DecodedIntegers::default(), f64::INFINITY);
    let mut second = f64::INFINITY;
    for n1 in -window..=window {
        for n2 in -window..=window {
            let f = shift.sector.form(lambda, shift.x1 - n1 as f64 * s1, shift.x2 - n2 as f64 * s2);
            if f < best.1 {
                second = best.1;
                best = (DecodedIntegers::new(n1, n2), f);
            } else if f < second {
                second = f;
            }
        }
    }
    (best.0, second - best.1)
}

/// Checks the three strip inequalities bounding the Voronoi cell of `n`,
/// each relaxed by `tol`.
pub fn in_voronoi_cell(shift: &JointShift, lambda: f64, n: DecodedIntegers, tol: f64) -> bool {
    let (r1, r2) = n.residual(shift, lambda);
    let strips = cell_strips(shift.sector, lambda);
    strips.iter().all(|&(k, w)| (r2 - k * r1).abs() < w + tol)
}

/// Strips `|r2 - k r1| < w`, as `(k, w)`, whose intersection is the cell
/// of the origin.
pub fn cell_strips(sector: Sector, lambda: f64) -> [(f64, f64); 3] {
    let sp = sqrt_pi();
    let l2 = lambda * lambda;
    match sector {
        Sector::QQ | Sector::QP => [
            (2.0 * lambda + 1.0 / lambda, (2.0 * l2 + 1.0) * sp / 2.0),
            (1.0 / (2.0 * lambda), sp / 2.0),
            (-2.0 * lambda, (2.0 * l2 + 1.0) * sp / 2.0),
        ],
        Sector::PP => [
            (-2.0 * lambda, sp),
            (-lambda / (2.0 * l2 + 1.0), sp / 2.0),
            (1.0 / (2.0 * lambda), (2.0 * l2 + 1.0) * sp / (4.0 * l2)),
        ],
        Sector::PQ => [
            (2.0 * lambda, sp),
            (lambda / (2.0 * l2 + 1.0), sp / 2.0),
            (-1.0 / (2.0 * lambda), (2.0 * l2 + 1.0) * sp / (4.0 * l2)),
        ],
    }
}

/// Posterior weights of the four parity classes `(00, 10, 01, 11)` given
/// decoded residuals, summed over the nearest translates of each class.
pub fn class_posterior(sector: Sector, lambda: f64, sigma: f64, r1: f64, r2: f64) -> [f64; 4] {
    const TRANSLATES: [(i64, i64, usize); 9] = [
        (0, 0, 0),
        (1, 0, 1),
        (-1, 0, 1),
        (0, 1, 2),
        (0, -1, 2),
        (1, 1, 3),
        (1, -1, 3),
        (-1, 1, 3),
        (-1, -1, 3),
    ];
    let dens = CorrelatedDensity::new(sector, lambda, sigma);
    let (s1, s2) = sector.spacings(lambda);
    let mut logs = [0.0; 9];
    for (slot, &(n1, n2, _)) in logs.iter_mut().zip(&TRANSLATES) {
        *slot = dens.log_kernel(r1 + n1 as f64 * s1, r2 + n2 as f64 * s2);
    }
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w = [0.0; 4];
    for (l, &(_, _, class)) in logs.iter().zip(&TRANSLATES) {
        w[class] += (l - m).exp();
    }
    let total: f64 = w.iter().sum();
    w.map(|x| x / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gkp::db_to_variance;
    use crate::rng::shot_rng;
    use rand_distr::{Distribution, Normal};

    fn sigma_10db() -> f64 {
        db_to_variance(10.0).sqrt()
    }

    #[test]
    fn density_at_origin() {
        let s = sigma_10db();
        let want = 1.0 / (2.0 * PI * 5f64.sqrt() * s * s);
        let got = density(Sector::QQ, 1.0, s, 0.0, 0.0);
        assert!(((got - want) / want).abs() < 1e-12);
    }

    #[test]
    fn determinant_matches_closed_form() {
        for &l in &[0.8, 1.0, 1.2] {
            for sec in Sector::ALL {
                let d = CorrelatedDensity::new(sec, l, 0.3);
                let want = (4.0 + 1.0 / (l * l)) * 0.3f64.powi(4);
                assert!(((d.determinant() - want) / want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn density_inverse_covariance_consistent() {
        // the form divided by (4 + 1/l^2) sigma^2 must equal x^T V^-1 x
        for &l in &[0.8, 1.2] {
            for sec in Sector::ALL {
                let d = CorrelatedDensity::new(sec, l, 0.25);
                let m = d.covariance;
                let det = d.determinant();
                let (x1, x2) = (0.37, -0.81);
                let quad = (m[1][1] * x1 * x1 - 2.0 * m[0][1] * x1 * x2 + m[0][0] * x2 * x2) / det;
                assert!((-0.5 * quad - d.log_kernel(x1, x2)).abs() < 1e-12, "{sec:?}");
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let s = sigma_10db();
        for sec in Sector::ALL {
            let h = 0.004;
            let n = 500;
            let mut total = 0.0;
            for i in -n..=n {
                for j in -n..=n {
                    total += density(sec, 1.2, s, i as f64 * h, j as f64 * h);
                }
            }
            total *= h * h;
            assert!((total - 1.0).abs() < 1e-4, "{sec:?}: {total}");
        }
    }

    #[test]
    fn pp_is_rotated_qq_at_unit_lambda() {
        let s = sigma_10db();
        for &(a, b) in &[(0.1, 0.2), (-0.5, 0.33), (0.9, -1.1)] {
            let pp = density(Sector::PP, 1.0, s, a, b);
            let qq = density(Sector::QQ, 1.0, s, b, -a);
            assert!(((pp - qq) / qq).abs() < 1e-12);
            assert_eq!(density(Sector::QQ, 1.0, s, a, b), density(Sector::QQ, 1.0, s, -a, -b));
        }
    }

    #[test]
    fn decode_examples() {
        let sp = sqrt_pi();
        for sec in Sector::ALL {
            assert_eq!(decode_ml(&JointShift::new(sec, 0.0, 0.0), 1.0), DecodedIntegers::new(0, 0));
        }
        assert_eq!(decode_ml(&JointShift::new(Sector::QQ, sp, 0.0), 1.0), DecodedIntegers::new(1, 0));
        assert_eq!(decode_closest(&JointShift::new(Sector::QQ, sp, 0.0), 1.0), DecodedIntegers::new(1, 0));
        let l = 1.2;
        assert_eq!(
            decode_closest(&JointShift::new(Sector::QQ, 0.6 * sp * l, 0.0), l),
            DecodedIntegers::new(1, 0)
        );
    }

    #[test]
    fn ml_and_closest_disagree_near_slanted_walls() {
        let s = (2.0 * db_to_variance(10.0)).sqrt();
        let dist = Normal::new(0.0, 1.6 * s).unwrap();
        let mut rng = shot_rng(99, 0);
        let mut found = 0;
        for _ in 0..200_000 {
            let sh = JointShift::new(Sector::QQ, dist.sample(&mut rng), dist.sample(&mut rng));
            let (oracle, gap) = brute_force_with_gap(&sh, 1.0, 3);
            if gap < 1e-9 {
                continue;
            }
            let ml = decode_ml(&sh, 1.0);
            let cl = decode_closest(&sh, 1.0);
            assert_eq!(ml, oracle);
            if cl != oracle {
                found += 1;
            }
        }
        assert!(found >= 10, "only {found} disagreements");
    }

    #[test]
    fn deep_cell_agreement() {
        let mut rng = shot_rng(3, 0);
        let u = rand_distr::Uniform::new(-0.1, 0.1).unwrap();
        for _ in 0..10_000 {
            for sec in Sector::ALL {
                let (s1, s2) = sec.spacings(0.8);
                let sh = JointShift::new(sec, u.sample(&mut rng) * s1 + 2.0 * s1, u.sample(&mut rng) * s2 - s2);
                assert_eq!(decode_ml(&sh, 0.8), decode_closest(&sh, 0.8));
            }
        }
    }

    #[test]
    fn oracle_window_sufficiency() {
        let mut rng = shot_rng(4, 0);
        let u = rand_distr::Uniform::new(-1.0, 1.0).unwrap();
        for _ in 0..2_000 {
            for sec in Sector::ALL {
                let (s1, s2) = sec.spacings(1.2);
                let sh = JointShift::new(sec, u.sample(&mut rng) * 1.5 * s1, u.sample(&mut rng) * 1.5 * s2);
                assert_eq!(brute_force_oracle(&sh, 1.2, 3), brute_force_oracle(&sh, 1.2, 4));
            }
        }
        assert_eq!(
            brute_force_oracle(&JointShift::new(Sector::PP, 0.0, 0.0), 1.0, 3),
            DecodedIntegers::new(0, 0)
        );
    }

    #[test]
    fn class_posterior_normalized_and_favors_origin() {
        let s = sigma_10db();
        for sec in Sector::ALL {
            let w = class_posterior(sec, 1.0, s, 0.0, 0.0);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w[0] > 0.99);
        }
    }
}
