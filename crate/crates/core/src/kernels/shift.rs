use crate::bath::{BathSpec, SystemSpec};

/// Finite part of the potential renormalization through order lambda^3,
/// evaluated at `x`. The divergent `delta(0)` pieces are not represented.
pub fn potential_shift_finite(bath: &BathSpec, system: &SystemSpec, x: f64) -> f64 {
    let f = system.coupling.eval(x);
    let lam = bath.lambda;
    let hbar = bath.hbar;
    let (mut first, mut second, mut third) = (0.0, 0.0, 0.0);
    for m in &bath.modes {
        let (mass, w) = (m.mass, m.omega);
        let c2 = m.coupling_p;
        first += hbar * (m.coupling_q + c2) / (2.0 * mass * w);
        second += hbar * c2 * c2 / (mass * mass * w.powi(3));
        third += 2.0 * hbar * c2.powi(3) / (mass.powi(3) * w.powi(5));
    }
    lam * first * f + lam * lam * second * f * f + lam * lam * lam * third * f * f * f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_values() {
        let sys = SystemSpec::harmonic(1.0, 1.0).unwrap();
        let b = BathSpec::single(1.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(potential_shift_finite(&b, &sys, 2.0), 1.0);
        assert_eq!(potential_shift_finite(&b, &sys, 0.0), 0.0);
        assert_eq!(potential_shift_finite(&b.with_lambda(0.0), &sys, 2.0), 0.0);
        // all three orders, one mode m=1, w=1, C1=0, C2=1, f(x)=x, lambda=1:
        // 0.5 x + x^2 + 2 x^3 at x = 1
        let b2 = BathSpec::single(1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert!((potential_shift_finite(&b2, &sys, 1.0) - 3.5).abs() < 1e-15);
    }
}
