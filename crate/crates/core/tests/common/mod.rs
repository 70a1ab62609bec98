//! Shared generators and independent oracles for the integration suites.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex;
use qbchain::qbc::{HilbertDims, PureState};
use rand::Rng;
use rand_distr::StandardNormal;

pub type C = Complex<f64>;

pub fn gaussian_c<R: Rng>(rng: &mut R) -> C {
    C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed pure state (normalized complex Gaussian).
pub fn random_state<R: Rng>(rng: &mut R, da: usize, db: usize) -> PureState<f64> {
    let dims = HilbertDims::new(da, db).unwrap();
    let amps = (0..da * db).map(|_| gaussian_c(rng)).collect();
    PureState::normalized(dims, amps).unwrap()
}

/// Random density matrix `G G† / Tr(G G†)` with Gaussian `G`.
pub fn random_density<R: Rng>(rng: &mut R, d: usize) -> DMatrix<C> {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian_c(rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    m / C::new(tr, 0.0)
}

/// Haar-ish unitary from the QR of a Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, d: usize) -> DMatrix<C> {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian_c(rng));
    g.qr().q()
}

/// `ρ_B[b, b'] = Σ_a ψ(a, b) conj(ψ(a, b'))` by explicit index summation.
pub fn partial_trace_oracle(amps: &[C], da: usize, db: usize) -> Vec<Vec<C>> {
    let mut out = vec![vec![C::new(0.0, 0.0); db]; db];
    for (b, row) in out.iter_mut().enumerate() {
        for (bp, cell) in row.iter_mut().enumerate() {
            for a in 0..da {
                *cell += amps[a * db + b] * amps[a * db + bp].conj();
            }
        }
    }
    out
}

/// Partial trace over `A` of a full `(da·db)²` density matrix, by loops.
pub fn partial_trace_density_oracle(m: &DMatrix<C>, da: usize, db: usize) -> DMatrix<C> {
    let mut out = DMatrix::from_element(db, db, C::new(0.0, 0.0));
    for b in 0..db {
        for bp in 0..db {
            for a in 0..da {
                out[(b, bp)] += m[(a * db + b, a * db + bp)];
            }
        }
    }
    out
}

/// Trace distance via eigenvalues of the Hermitian difference.
pub fn trace_distance_oracle(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    let d = a - b;
    let h = (&d + d.adjoint()) * C::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>() / 2.0
}

/// `|⟨c1|(U ⊗ I)|c0⟩|` evaluated by explicit sums.
pub fn overlap(u: &[[C; 2]; 2], c0: &[C], c1: &[C], db: usize) -> f64 {
    let mut acc = C::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..db {
            let mut uc0 = C::new(0.0, 0.0);
            for ap in 0..2 {
                uc0 += u[a][ap] * c0[ap * db + b];
            }
            acc += c1[a * db + b].conj() * uc0;
        }
    }
    acc.norm()
}

/// Element of U(2) up to global phase, which cannot change the overlap's modulus.
pub fn su2(theta: f64, alpha: f64, beta: f64) -> [[C; 2]; 2] {
    let (s, c) = theta.sin_cos();
    let ea = C::from_polar(1.0, alpha);
    let eb = C::from_polar(1.0, beta);
    [[ea * c, eb * s], [-eb.conj() * s, ea.conj() * c]]
}

/// Numerical `max_U |⟨c1|(U ⊗ I)|c0⟩|` over U(2): grid seed then pattern
/// search with a shrinking step.
pub fn max_overlap_numerical(c0: &[C], c1: &[C], db: usize) -> f64 {
    use std::f64::consts::PI;
    let f = |p: [f64; 3]| overlap(&su2(p[0], p[1], p[2]), c0, c1, db);
    let grid = 12;
    let mut best = ([0.0; 3], f64::MIN);
    for i in 0..=grid {
        for j in 0..grid {
            for k in 0..grid {
                let p = [
                    PI / 2.0 * i as f64 / grid as f64,
                    2.0 * PI * j as f64 / grid as f64,
                    2.0 * PI * k as f64 / grid as f64,
                ];
                let v = f(p);
                if v > best.1 {
                    best = (p, v);
                }
            }
        }
    }
    let mut step = 0.2;
    while step > 1e-10 {
        let mut improved = false;
        for axis in 0..3 {
            for dir in [-1.0, 1.0] {
                let mut p = best.0;
                p[axis] += dir * step;
                let v = f(p);
                if v > best.1 {
                    best = (p, v);
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best.1
}

/// Randomized networked consensus runs shared by the consensus suites.
pub mod consensus {
    use std::collections::BTreeMap;

    use qbchain::consensus::{
        run_consensus, tolerance, ByzantineBehavior, ConsensusInstance, ConsensusReport, ExplicitDomain, FaultModel,
    };
    use qbchain::party::PartyId;
    use qbchain::seed;
    use qbchain::sim::Sim;
    use qbchain::transport::{AdversaryHook, HookAction, NetworkConfig};
    use rand::seq::{IndexedRandom, SliceRandom};
    use rand::Rng;

    pub const VALUES: [&[u8]; 3] = [b"alpha", b"beta", b"gamma"];

    pub struct Outcome {
        pub n: usize,
        pub byzantine: usize,
        pub report: ConsensusReport,
    }

    pub fn random_run(master: u64, run: u64) -> Outcome {
        let mut rng = seed::rng(master, "consensus-suite", run);
        let n = [4usize, 7, 10][run as usize % 3];
        let ps: Vec<PartyId> = (0..n as u32).map(PartyId::miner).collect();
        let f = rng.random_range(0..=tolerance(n));
        let mut order = ps.clone();
        order.shuffle(&mut rng);
        let behaviors = [ByzantineBehavior::Equivocate, ByzantineBehavior::Silent, ByzantineBehavior::Garbage];
        let byzantine: BTreeMap<PartyId, ByzantineBehavior> =
            order[..f].iter().map(|&p| (p, *behaviors.choose(&mut rng).unwrap())).collect();

        let domain = ExplicitDomain::new(VALUES.iter().map(|v| v.to_vec()));
        let mut instance = ConsensusInstance::new(run, ps.clone(), &domain).unwrap();
        let unanimous = rng.random_bool(0.5);
        let common = VALUES.choose(&mut rng).unwrap().to_vec();
        for &p in &ps {
            let v = if unanimous { common.clone() } else { VALUES.choose(&mut rng).unwrap().to_vec() };
            instance.propose(p, v).unwrap();
        }

        let mut sim = Sim::new(NetworkConfig { seed: rng.random(), ..NetworkConfig::default() }, &ps).unwrap();
        for _ in 0..rng.random_range(0..3 * n) {
            let (from, to) = (*ps.choose(&mut rng).unwrap(), *ps.choose(&mut rng).unwrap());
            if from == to {
                continue;
            }
            let nth = rng.random_range(0..(3 * (tolerance(n) + 1)) as u64);
            let action = if byzantine.contains_key(&from) && rng.random_bool(0.5) {
                HookAction::FlipBit { bit: rng.random_range(0..200) }
            } else {
                HookAction::Delay { steps: rng.random_range(1..40) }
            };
            sim.net.add_hook(AdversaryHook { from, to, nth, action });
        }
        let faults = FaultModel { byzantine };
        let report = run_consensus(&mut sim, &instance, &faults, rng.random()).unwrap();
        Outcome { n, byzantine: f, report }
    }
}
