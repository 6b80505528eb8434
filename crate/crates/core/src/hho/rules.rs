//! Position update rules. Each branch is a pure function of its inputs and
//! random draws so it can be checked in isolation.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::SearchSpace;

/// Default Lévy exponent.
pub const LEVY_BETA: f64 = 1.5;

/// `2·E0·(1 − t/T)`.
pub fn escaping_energy(e0: f64, t: usize, max_iters: usize) -> f64 {
    2.0 * e0 * (1.0 - t as f64 / max_iters as f64)
}

/// Mantegna's scale for the numerator normal of a Lévy step.
pub fn mantegna_sigma(beta: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let num = gamma(1.0 + beta) * (std::f64::consts::PI * beta / 2.0).sin();
    let den = gamma((1.0 + beta) / 2.0) * beta * 2f64.powf((beta - 1.0) / 2.0);
    (num / den).powf(1.0 / beta)
}

/// Lévy-distributed step per dimension: `0.01·u·σ / |v|^(1/β)`.
pub fn levy_flight<R: Rng + ?Sized>(dim: usize, beta: f64, rng: &mut R) -> Vec<f64> {
    let sigma = mantegna_sigma(beta);
    (0..dim)
        .map(|_| {
            let u: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            let step = 0.01 * u * sigma / v.abs().powf(1.0 / beta);
            // v = 0 has probability zero but would give an infinite step.
            if step.is_finite() {
                step
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    /// Perch relative to a randomly chosen hawk.
    ExploreRandomHawk,
    /// Perch relative to the rabbit and the population mean.
    ExploreRabbitMean,
    SoftBesiege,
    HardBesiege,
    SoftBesiegeDive,
    HardBesiegeDive,
}

/// Branch selection from the energy and the two uniform draws `q` and `r`.
pub fn select_phase(energy: f64, q: f64, r: f64) -> Phase {
    let e = energy.abs();
    if e >= 1.0 {
        if q >= 0.5 {
            Phase::ExploreRandomHawk
        } else {
            Phase::ExploreRabbitMean
        }
    } else if r >= 0.5 {
        if e >= 0.5 {
            Phase::SoftBesiege
        } else {
            Phase::HardBesiege
        }
    } else if e >= 0.5 {
        Phase::SoftBesiegeDive
    } else {
        Phase::HardBesiegeDive
    }
}

/// `X_rand − r1·|X_rand − 2·r2·X|`.
pub fn explore_random_hawk(x_rand: &[f64], x: &[f64], r1: f64, r2: f64) -> Vec<f64> {
    x_rand.iter().zip(x).map(|(&xr, &xi)| xr - r1 * (xr - 2.0 * r2 * xi).abs()).collect()
}

/// `(rabbit − mean) − r3·(LB + r4·(UB − LB))`.
pub fn explore_rabbit_mean(rabbit: &[f64], mean: &[f64], space: &SearchSpace, r3: f64, r4: f64) -> Vec<f64> {
    (0..rabbit.len())
        .map(|i| {
            let (lb, ub) = (space.lower()[i], space.upper()[i]);
            (rabbit[i] - mean[i]) - r3 * (lb + r4 * (ub - lb))
        })
        .collect()
}

/// `(rabbit − X) − E·|J·rabbit − X|`.
pub fn soft_besiege(x: &[f64], rabbit: &[f64], energy: f64, jump: f64) -> Vec<f64> {
    x.iter().zip(rabbit).map(|(&xi, &ri)| (ri - xi) - energy * (jump * ri - xi).abs()).collect()
}

/// `rabbit − E·|rabbit − X|`.
pub fn hard_besiege(x: &[f64], rabbit: &[f64], energy: f64) -> Vec<f64> {
    x.iter().zip(rabbit).map(|(&xi, &ri)| ri - energy * (ri - xi).abs()).collect()
}

/// First dive candidate `Y = rabbit − E·|J·rabbit − anchor|`; the anchor is the
/// hawk itself for the soft dive and the population mean for the hard dive.
pub fn dive_candidate(anchor: &[f64], rabbit: &[f64], energy: f64, jump: f64) -> Vec<f64> {
    anchor.iter().zip(rabbit).map(|(&ai, &ri)| ri - energy * (jump * ri - ai).abs()).collect()
}

/// Second dive candidate `Z = Y + S ∘ LF`.
pub fn levy_candidate(y: &[f64], s: &[f64], levy: &[f64]) -> Vec<f64> {
    y.iter().zip(s).zip(levy).map(|((&yi, &si), &li)| yi + si * li).collect()
}

/// Population state shared by every hawk update within one iteration.
#[derive(Debug, Clone, Copy)]
pub struct UpdateContext<'a> {
    pub space: &'a SearchSpace,
    pub population: &'a [Vec<f64>],
    pub rabbit: &'a [f64],
    pub mean: &'a [f64],
    pub levy_beta: f64,
}

/// An evaluated dive candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct DiveTrial {
    pub position: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub phase: Phase,
    pub position: Vec<f64>,
    /// Known fitness of `position`: set for dive phases (accepted candidate or
    /// the unchanged hawk), `None` when the position still needs evaluating.
    pub fitness: Option<f64>,
    /// Dive candidates evaluated during the update, in evaluation order.
    pub dives: Vec<DiveTrial>,
}

/// Moves one hawk. `fitness` is the hawk's current fitness and `evaluate`
/// scores dive candidates (non-finite results count as +infinity). Draw order
/// from `rng`: q, r, then the branch's own variables.
pub fn update_position<R: Rng + ?Sized>(
    x: &[f64],
    fitness: f64,
    energy: f64,
    ctx: &UpdateContext<'_>,
    rng: &mut R,
    evaluate: &mut dyn FnMut(&[f64]) -> f64,
) -> UpdateOutcome {
    let q: f64 = rng.random();
    let r: f64 = rng.random();
    let phase = select_phase(energy, q, r);
    let space = ctx.space;
    let moved =
        |position: Vec<f64>| UpdateOutcome { phase, position: space.clamp(position), fitness: None, dives: Vec::new() };
    match phase {
        Phase::ExploreRandomHawk => {
            let k = rng.random_range(0..ctx.population.len());
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            moved(explore_random_hawk(&ctx.population[k], x, r1, r2))
        }
        Phase::ExploreRabbitMean => {
            let (r3, r4): (f64, f64) = (rng.random(), rng.random());
            moved(explore_rabbit_mean(ctx.rabbit, ctx.mean, space, r3, r4))
        }
        Phase::SoftBesiege => {
            let jump = 2.0 * (1.0 - rng.random::<f64>());
            moved(soft_besiege(x, ctx.rabbit, energy, jump))
        }
        Phase::HardBesiege => moved(hard_besiege(x, ctx.rabbit, energy)),
        Phase::SoftBesiegeDive | Phase::HardBesiegeDive => {
            let jump = 2.0 * (1.0 - rng.random::<f64>());
            let anchor = if phase == Phase::SoftBesiegeDive { x } else { ctx.mean };
            let y = space.clamp(dive_candidate(anchor, ctx.rabbit, energy, jump));
            let fy = finite_or_inf(evaluate(&y));
            let mut dives = vec![DiveTrial { position: y.clone(), fitness: fy }];
            if fy < fitness {
                return UpdateOutcome { phase, position: y, fitness: Some(fy), dives };
            }
            let s: Vec<f64> = (0..x.len()).map(|_| rng.random()).collect();
            let lf = levy_flight(x.len(), ctx.levy_beta, rng);
            let z = space.clamp(levy_candidate(&y, &s, &lf));
            let fz = finite_or_inf(evaluate(&z));
            dives.push(DiveTrial { position: z.clone(), fitness: fz });
            let (position, fitness) = if fz < fitness { (z, fz) } else { (x.to_vec(), fitness) };
            UpdateOutcome { phase, position, fitness: Some(fitness), dives }
        }
    }
}

pub(crate) fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn energy_examples() {
        assert_eq!(escaping_energy(0.5, 0, 10), 1.0);
        assert_eq!(escaping_energy(-0.9, 50, 100), -0.9);
        let t = 40;
        assert!((escaping_energy(0.7, t - 1, t).abs() - 2.0 * 0.7 / t as f64).abs() < 1e-15);
    }

    #[test]
    fn mantegna_sigma_for_default_beta() {
        // Γ(2.5)·sin(0.75π) / (Γ(1.25)·1.5·2^0.25), raised to 1/1.5.
        let g25 = 0.75 * std::f64::consts::PI.sqrt();
        let g125 = 0.906_402_477_055_477;
        let expected = (g25 * (0.75 * std::f64::consts::PI).sin() / (g125 * 1.5 * 2f64.powf(0.25))).powf(1.0 / 1.5);
        assert!((mantegna_sigma(1.5) - expected).abs() < 1e-12);
        assert!((mantegna_sigma(1.5) - 0.696_574_502_557_275).abs() < 1e-9);
    }

    #[test]
    fn levy_is_reproducible_and_sized() {
        let a = levy_flight(5, 1.5, &mut rng::seeded(3));
        let b = levy_flight(5, 1.5, &mut rng::seeded(3));
        assert_eq!(a, b);
        assert_eq!(levy_flight(1, 1.5, &mut rng::seeded(3)).len(), 1);
        assert!(a.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn levy_has_heavy_tail() {
        let mut r = rng::seeded(11);
        let mut mags: Vec<f64> = levy_flight(10_000, 1.5, &mut r).iter().map(|v| v.abs()).collect();
        mags.sort_by(f64::total_cmp);
        let median = mags[mags.len() / 2];
        let max = *mags.last().unwrap();
        assert!(max > 20.0 * median, "max {max} median {median}");
    }

    #[test]
    fn phase_table() {
        assert_eq!(select_phase(1.2, 0.7, 0.0), Phase::ExploreRandomHawk);
        assert_eq!(select_phase(-1.0, 0.2, 0.9), Phase::ExploreRabbitMean);
        assert_eq!(select_phase(0.7, 0.0, 0.5), Phase::SoftBesiege);
        assert_eq!(select_phase(-0.3, 0.0, 0.8), Phase::HardBesiege);
        assert_eq!(select_phase(0.5, 0.9, 0.1), Phase::SoftBesiegeDive);
        assert_eq!(select_phase(0.49, 0.9, 0.49), Phase::HardBesiegeDive);
        for e in [-0.99, -0.5, 0.0, 0.3, 0.99] {
            for q in [0.0, 0.6] {
                for r in [0.1, 0.7] {
                    let p = select_phase(e, q, r);
                    assert!(!matches!(p, Phase::ExploreRandomHawk | Phase::ExploreRabbitMean));
                }
            }
        }
    }

    #[test]
    fn hard_besiege_closed_form() {
        let x = [1.0, -2.0, 3.5];
        let rabbit = [0.5, 0.5, 0.5];
        let e = 0.3;
        let got = hard_besiege(&x, &rabbit, e);
        for i in 0..3 {
            assert_eq!(got[i], rabbit[i] - e * (rabbit[i] - x[i]).abs());
        }
        assert_eq!(hard_besiege(&x, &rabbit, 0.0), rabbit.to_vec());
    }

    #[test]
    fn other_rules_closed_form() {
        let x = [1.0, 2.0];
        let rb = [0.0, 1.0];
        assert_eq!(soft_besiege(&x, &rb, 0.5, 1.5), vec![-1.0 - 0.5, -1.0 - 0.5 * 0.5]);
        assert_eq!(explore_random_hawk(&rb, &x, 0.5, 0.25), vec![0.0 - 0.5 * 0.5, 1.0 - 0.5 * 0.0]);
        let space = SearchSpace::new(vec![-1.0, 0.0], vec![1.0, 4.0]).unwrap();
        assert_eq!(explore_rabbit_mean(&rb, &[0.5, 0.5], &space, 0.5, 0.5), vec![-0.5 - 0.5 * 0.0, 0.5 - 0.5 * 2.0]);
        assert_eq!(dive_candidate(&x, &rb, 0.5, 2.0), vec![0.0 - 0.5, 1.0 - 0.0]);
        assert_eq!(levy_candidate(&[1.0, 1.0], &[0.5, 0.0], &[2.0, 9.0]), vec![2.0, 1.0]);
    }

    fn ctx_for<'a>(
        space: &'a SearchSpace,
        pop: &'a [Vec<f64>],
        rabbit: &'a [f64],
        mean: &'a [f64],
    ) -> UpdateContext<'a> {
        UpdateContext { space, population: pop, rabbit, mean, levy_beta: LEVY_BETA }
    }

    #[test]
    fn outputs_are_clamped_exactly() {
        let space = SearchSpace::new(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        let pop = vec![vec![1.0; 3], vec![-1.0; 3]];
        let rabbit = vec![1.0; 3];
        let mean = vec![0.0; 3];
        let ctx = ctx_for(&space, &pop, &rabbit, &mean);
        for seed in 0..200 {
            for e in [-1.9, -0.7, -0.2, 0.2, 0.7, 1.9] {
                let out = update_position(&[-1.0; 3], 5.0, e, &ctx, &mut rng::seeded(seed), &mut |p| {
                    p.iter().map(|v| v * v).sum()
                });
                assert!(out.position.iter().all(|&v| (-1.0..=1.0).contains(&v)), "{out:?}");
            }
        }
        // Soft besiege far outside the box lands on the bound itself.
        let raw = soft_besiege(&[-1.0; 3], &rabbit, -0.9, 2.0);
        assert!(raw.iter().all(|&v| v > 1.0));
        assert_eq!(space.clamp(raw), vec![1.0; 3]);
    }

    #[test]
    fn dives_accept_only_strict_improvement() {
        let space = SearchSpace::new(vec![-5.0; 2], vec![5.0; 2]).unwrap();
        let pop = vec![vec![2.0, 2.0], vec![1.0, 1.0]];
        let rabbit = vec![1.0, 1.0];
        let mean = vec![1.5, 1.5];
        let ctx = ctx_for(&space, &pop, &rabbit, &mean);
        let mut dives_seen = 0;
        for seed in 0..400 {
            // Energy 0.7 with r < 0.5 gives a soft dive; a constant objective
            // never improves, so the hawk stays put.
            let out = update_position(&[2.0, 2.0], 1.0, 0.7, &ctx, &mut rng::seeded(seed), &mut |_| 1.0);
            if out.phase == Phase::SoftBesiegeDive {
                dives_seen += 1;
                assert_eq!(out.position, vec![2.0, 2.0]);
                assert_eq!(out.fitness, Some(1.0));
                assert_eq!(out.dives.len(), 2);
            }
            let out = update_position(&[2.0, 2.0], 1.0, 0.2, &ctx, &mut rng::seeded(seed), &mut |_| f64::NAN);
            if out.phase == Phase::HardBesiegeDive {
                assert_eq!(out.position, vec![2.0, 2.0]);
                assert!(out.dives.iter().all(|d| d.fitness == f64::INFINITY));
            }
            let out = update_position(&[2.0, 2.0], 1.0, 0.2, &ctx, &mut rng::seeded(seed), &mut |_| 0.5);
            if out.phase == Phase::HardBesiegeDive {
                assert_eq!(out.dives.len(), 1);
                assert_eq!(out.fitness, Some(0.5));
                assert_eq!(out.position, out.dives[0].position);
            }
        }
        assert!(dives_seen > 50);
    }
}
