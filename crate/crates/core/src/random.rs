//! Seeded draws of states, unitaries, angles and legal circuits.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix2;
use rand::Rng;

use crate::compiler::{LogicalCircuit, LogicalOp, Wire};
use crate::statevector::{Complex, Qubit};

/// Uniform in `(-π, π]`.
pub fn angle<R: Rng>(rng: &mut R) -> f64 {
    PI - rng.random::<f64>() * 2.0 * PI
}

/// Uniform angle at least 0.2 rad from every multiple of π/2.
pub fn generic_angle<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let a = angle(rng);
        let r = a.rem_euclid(FRAC_PI_2);
        if r > 0.2 && r < FRAC_PI_2 - 0.2 {
            return a;
        }
    }
}

/// Haar-random pure qubit with a random global phase.
pub fn qubit<R: Rng>(rng: &mut R) -> Qubit {
    let theta = (1.0 - 2.0 * rng.random::<f64>()).acos();
    let phi = angle(rng);
    let g = Complex::from_polar(1.0, angle(rng));
    Qubit::new(
        g * (theta / 2.0).cos(),
        g * Complex::from_polar((theta / 2.0).sin(), phi),
    )
}

/// `exp(iK)` for a random Hermitian `K = k0 I + k·σ`, entries uniform in
/// `[-π, π]`.
pub fn unitary<R: Rng>(rng: &mut R) -> Matrix2<Complex> {
    let k0 = angle(rng);
    let k = [angle(rng), angle(rng), angle(rng)];
    let len = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [nx, ny, nz] = k.map(|v| v / len);
    let (c, s) = (len.cos(), len.sin());
    let i = Complex::new(0.0, 1.0);
    // cos|k| I + i sin|k| (n·σ)
    let m = Matrix2::new(
        Complex::new(c, 0.0) + i * s * nz,
        i * s * Complex::new(nx, -ny),
        i * s * Complex::new(nx, ny),
        Complex::new(c, 0.0) - i * s * nz,
    );
    m * Complex::from_polar(1.0, k0)
}

/// A legal random circuit with at most `max_wires` wires, `max_ops` ops and
/// `max_measured` measured qubits.
pub fn circuit<R: Rng>(
    rng: &mut R,
    max_wires: usize,
    max_ops: usize,
    max_measured: usize,
) -> LogicalCircuit {
    let n = rng.random_range(1..=max_wires.max(1));
    let wires = (0..n)
        .map(|i| Wire {
            name: format!("w{i}"),
            input: qubit(rng),
        })
        .collect();
    let mut ops = Vec::new();
    let mut after_junction = vec![false; n];
    let mut closed = vec![false; n];
    let mut measured = 0;
    for _ in 0..rng.random_range(1..=max_ops.max(1)) {
        let open: Vec<usize> = (0..n).filter(|&w| !closed[w]).collect();
        let joinable: Vec<usize> = open
            .iter()
            .copied()
            .filter(|&w| !after_junction[w])
            .collect();
        let want_junction = joinable.len() >= 2 && rng.random_bool(0.4);
        if want_junction {
            let a = joinable[rng.random_range(0..joinable.len())];
            let rest: Vec<usize> = joinable.iter().copied().filter(|&w| w != a).collect();
            let b = rest[rng.random_range(0..rest.len())];
            let terminal = rng.random_bool(0.15);
            if terminal {
                closed[a] = true;
                closed[b] = true;
                ops.push(LogicalOp::Junction {
                    wires: (a, b),
                    angles: None,
                });
            } else if measured + 2 <= max_measured {
                measured += 2;
                after_junction[a] = true;
                after_junction[b] = true;
                ops.push(LogicalOp::Junction {
                    wires: (a, b),
                    angles: Some((angle(rng), angle(rng))),
                });
            }
        } else if !open.is_empty() && measured < max_measured {
            let w = open[rng.random_range(0..open.len())];
            measured += 1;
            after_junction[w] = false;
            ops.push(LogicalOp::Rot {
                wire: w,
                alpha: angle(rng),
            });
        }
    }
    LogicalCircuit { wires, ops }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::unitarity_deviation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            assert!((qubit(&mut rng).norm() - 1.0).abs() < 1e-12);
            assert!(unitarity_deviation(&unitary(&mut rng)) < 1e-12);
            let g = generic_angle(&mut rng);
            assert!(g > -PI && g <= PI);
            assert!(circuit(&mut rng, 3, 8, 10).check().is_ok());
        }
    }
}
