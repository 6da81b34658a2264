//! The generation loop: produce resources from the current fit, turn them
//! into an iteration budget, and spend each iteration proposing one edit to
//! either the technological system or the search space.

use std::cmp::max;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitstring::{sample_proposal_with, Bitstring, EditProposal, RemovePolicy};
use crate::corridor::Corridor;
use crate::distance::{improvement_threshold, levenshtein, levenshtein_bounded, DistanceBudget, Effectiveness};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Random stream used for a single run.
pub type RunRng = ChaCha8Rng;

/// How positive resources become a whole number of iterations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationRounding {
    /// `max(1, floor(R))`
    #[default]
    Floor,
    /// `max(1, round(R))`
    Round,
}

/// What a deficit generation costs the endowment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndowmentCharge {
    /// The deficit `|R|`; the single iteration itself is free.
    #[default]
    Deficit,
    /// `|R| + 1`: the deficit plus one unit for the funded iteration.
    DeficitPlusFunding,
}

/// Full configuration of one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params<R> {
    /// Selection strength on the technological system.
    pub eta: R,
    /// Selection strength on the search space.
    pub lambda: R,
    pub init_complexity: usize,
    pub endowment: R,
    pub max_generations: u64,
    pub max_complexity: usize,
    pub seed: u64,
    pub remove_policy: RemovePolicy,
    pub iteration_rounding: IterationRounding,
    pub endowment_charge: EndowmentCharge,
    /// Keep every n-th generation record; 0 keeps none.
    pub record_every: u64,
}

impl<R: Real> Default for Params<R> {
    fn default() -> Self {
        Params {
            eta: R::from_f64(0.5).unwrap(),
            lambda: R::from_f64(0.5).unwrap(),
            init_complexity: 2,
            endowment: R::from_f64(100.0).unwrap(),
            max_generations: 10_000,
            max_complexity: 10_000,
            seed: 0,
            remove_policy: RemovePolicy::Resample,
            iteration_rounding: IterationRounding::Floor,
            endowment_charge: EndowmentCharge::Deficit,
            record_every: 1,
        }
    }
}

impl<R: Real> Params<R> {
    pub fn with_strengths(eta: R, lambda: R) -> Self {
        Params {
            eta,
            lambda,
            ..Params::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: R| {
            if v >= R::zero() && v <= R::one() {
                Ok(())
            } else {
                Err(Error::config(name, format!("must lie in [0, 1], got {v}")))
            }
        };
        unit("eta", self.eta)?;
        unit("lambda", self.lambda)?;
        if self.init_complexity < 1 {
            return Err(Error::config("init_complexity", "must be at least 1"));
        }
        if !self.endowment.is_finite() {
            return Err(Error::config("endowment", "must be finite"));
        }
        if self.max_complexity <= self.init_complexity {
            return Err(Error::config(
                "max_complexity",
                format!("must exceed init_complexity ({})", self.init_complexity),
            ));
        }
        Ok(())
    }

    fn budget_rule(&self) -> BudgetRule {
        BudgetRule {
            rounding: self.iteration_rounding,
            charge: self.endowment_charge,
        }
    }
}

/// The two processes an iteration can be allocated to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Process {
    Technology,
    SearchSpace,
}

/// A society: its technological system, its search space and its reserves.
#[derive(Clone, Debug, PartialEq)]
pub struct SocietyState<R> {
    pub t: Bitstring,
    pub s: Bitstring,
    pub endowment: R,
    /// Completed generations.
    pub generation: u64,
    /// `LD(t, s)`, kept in step with every adopted edit.
    pub cached_distance: usize,
    tracker: Tracker,
}

/// Strings at least this long are scored through an incremental corridor
/// instead of fresh bit-parallel runs.
const TRACK_FROM: usize = 256;
const TRACK_MARGIN: usize = 32;

/// Incremental distance state for long strings. It keeps its own copy of the
/// pair it describes and is rebuilt whenever that copy goes out of date, so
/// it carries no state of its own: equality ignores it and clones start
/// without it.
#[derive(Default)]
struct Tracker(Option<Box<Corridor>>);

impl Clone for Tracker {
    fn clone(&self) -> Self {
        Tracker(None)
    }
}

impl Tracker {
    fn get(&mut self, t: &Bitstring, s: &Bitstring, ld: usize) -> Option<&mut Corridor> {
        if max(t.len(), s.len()) < TRACK_FROM {
            self.0 = None;
            return None;
        }
        match &mut self.0 {
            Some(c) if c.tracks(t, s, ld) => {}
            slot => *slot = Some(Box::new(Corridor::new(t, s, ld, TRACK_MARGIN))),
        }
        self.0.as_deref_mut()
    }
}

impl PartialEq for Tracker {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl std::fmt::Debug for Tracker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(if self.0.is_some() { "Tracker(active)" } else { "Tracker" })
    }
}

impl<R: Real> SocietyState<R> {
    pub fn new(t: Bitstring, s: Bitstring, endowment: R) -> Self {
        let cached_distance = levenshtein(&t, &s);
        SocietyState {
            t,
            s,
            endowment,
            generation: 0,
            cached_distance,
            tracker: Tracker::default(),
        }
    }

    pub fn effectiveness(&self) -> Effectiveness {
        Effectiveness::new(self.cached_distance, max(self.t.len(), self.s.len()))
    }

    pub fn resources(&self) -> R {
        resources(self.t.len(), self.s.len(), self.effectiveness().value())
    }
}

/// `c_s·E − c_t·(1 − E)`: benefits from the search space minus the cost of an
/// ineffective technological system.
pub fn resources<R: Real>(c_t: usize, c_s: usize, effectiveness: R) -> R {
    R::from_count(c_s) * effectiveness - R::from_count(c_t) * (R::one() - effectiveness)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget<R> {
    pub iterations: u64,
    pub endowment: R,
    pub barrier: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BudgetRule {
    pub rounding: IterationRounding,
    pub charge: EndowmentCharge,
}

impl BudgetRule {
    pub fn apply<R: Real>(&self, resources: R, endowment: R) -> Budget<R> {
        if resources > R::zero() {
            let whole = match self.rounding {
                IterationRounding::Floor => resources.floor(),
                IterationRounding::Round => resources.round(),
            };
            let iterations = whole.to_u64().unwrap_or(u64::MAX).max(1);
            Budget {
                iterations,
                endowment,
                barrier: false,
            }
        } else if endowment > R::zero() {
            let cost = match self.charge {
                EndowmentCharge::Deficit => -resources,
                EndowmentCharge::DeficitPlusFunding => R::one() - resources,
            };
            Budget {
                iterations: 1,
                endowment: endowment - cost,
                barrier: false,
            }
        } else {
            Budget {
                iterations: 0,
                endowment,
                barrier: true,
            }
        }
    }
}

/// Iterations granted for a generation producing `resources`, under the
/// default floor/deficit rule.
pub fn iteration_budget<R: Real>(resources: R, endowment: R) -> Budget<R> {
    BudgetRule::default().apply(resources, endowment)
}

/// Adoption under selection strength `strength`: improvements are always
/// kept, anything else with probability `1 − strength`. The uniform is drawn
/// either way.
pub fn adopt_decision<R: Real, G: Rng + ?Sized>(improved: bool, strength: R, rng: &mut G) -> bool {
    let u = R::sample_unit(rng);
    improved || u < R::one() - strength
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IterationOutcome {
    pub process: Process,
    pub adopted: bool,
}

/// One generate-and-maybe-adopt iteration.
///
/// Random draws, in order: allocation coin, proposal kind, position,
/// expansion bit (expansions only), adoption uniform. The distance work is
/// done after all draws, and only as far as the decision needs it.
pub fn step_iteration<R: Real, G: Rng + ?Sized>(
    state: &mut SocietyState<R>,
    params: &Params<R>,
    rng: &mut G,
) -> IterationOutcome {
    let process = if rng.gen::<bool>() {
        Process::Technology
    } else {
        Process::SearchSpace
    };
    let (target, other, strength) = match process {
        Process::Technology => (&state.t, &state.s, params.eta),
        Process::SearchSpace => (&state.s, &state.t, params.lambda),
    };
    let proposal = sample_proposal_with(target.len(), params.remove_policy, rng);
    let forced = adopt_decision(false, strength, rng);
    let Some(proposal) = proposal else {
        return IterationOutcome {
            process,
            adopted: false,
        };
    };
    let on_t = process == Process::Technology;
    let old = state.cached_distance;
    let threshold = || improvement_threshold(target.len(), other.len(), old, edited_len(target, &proposal));
    let new_distance = if let Some(corridor) = state.tracker.get(&state.t, &state.s, old) {
        let d = corridor.distance_after(on_t, &proposal);
        let adopt = forced || threshold().is_some_and(|limit| d <= limit);
        if adopt {
            corridor.commit(on_t, &proposal, d);
        }
        adopt.then_some(d)
    } else if forced {
        let edited = apply(target, &proposal);
        Some(exact_after_edit(&edited, other, old))
    } else {
        threshold().and_then(|limit| {
            levenshtein_bounded(&apply(target, &proposal), other, DistanceBudget(limit))
        })
    };
    let Some(new_distance) = new_distance else {
        return IterationOutcome {
            process,
            adopted: false,
        };
    };
    let edited = apply(target, &proposal);
    match process {
        Process::Technology => state.t = edited,
        Process::SearchSpace => state.s = edited,
    }
    state.cached_distance = new_distance;
    IterationOutcome {
        process,
        adopted: true,
    }
}

fn apply(target: &Bitstring, proposal: &EditProposal) -> Bitstring {
    target
        .apply(proposal)
        .expect("sampled proposals are valid for their target")
}

fn edited_len(target: &Bitstring, proposal: &EditProposal) -> usize {
    (target.len() as isize + proposal.length_delta()) as usize
}

fn exact_after_edit(edited: &Bitstring, other: &Bitstring, old: usize) -> usize {
    levenshtein_bounded(edited, other, DistanceBudget(old + 1))
        .unwrap_or_else(|| levenshtein(edited, other))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    MaxGenerations,
    ComplexityCeiling,
    AbsorbingBarrier,
}

impl HaltReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            HaltReason::MaxGenerations => "max_generations",
            HaltReason::ComplexityCeiling => "complexity_ceiling",
            HaltReason::AbsorbingBarrier => "absorbing_barrier",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "max_generations" => Some(HaltReason::MaxGenerations),
            "complexity_ceiling" => Some(HaltReason::ComplexityCeiling),
            "absorbing_barrier" => Some(HaltReason::AbsorbingBarrier),
            _ => None,
        }
    }
}

/// Snapshot of one completed generation. Lengths, effectiveness and
/// resources are the values at the start of the generation; `endowment` is
/// after this generation's charge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord<R> {
    pub generation: u64,
    pub c_t: usize,
    pub c_s: usize,
    pub effectiveness: R,
    pub resources: R,
    pub endowment: R,
    pub iterations: u64,
    pub adopted_t: u64,
    pub adopted_s: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GenerationStep<R> {
    Completed(GenerationRecord<R>),
    Halted(HaltReason),
}

/// Runs one generation, or reports why the run is over.
///
/// Halting is checked at the start, in order: generation limit, complexity
/// ceiling on either string, absorbing barrier.
pub fn run_generation<R: Real, G: Rng + ?Sized>(
    state: &mut SocietyState<R>,
    params: &Params<R>,
    rng: &mut G,
) -> GenerationStep<R> {
    if state.generation >= params.max_generations {
        return GenerationStep::Halted(HaltReason::MaxGenerations);
    }
    let (c_t, c_s) = (state.t.len(), state.s.len());
    if c_t >= params.max_complexity || c_s >= params.max_complexity {
        return GenerationStep::Halted(HaltReason::ComplexityCeiling);
    }
    let effectiveness: R = state.effectiveness().value();
    let produced = resources(c_t, c_s, effectiveness);
    let budget = params.budget_rule().apply(produced, state.endowment);
    if budget.barrier {
        return GenerationStep::Halted(HaltReason::AbsorbingBarrier);
    }
    state.endowment = budget.endowment;

    let (mut adopted_t, mut adopted_s) = (0, 0);
    for _ in 0..budget.iterations {
        let outcome = step_iteration(state, params, rng);
        if outcome.adopted {
            match outcome.process {
                Process::Technology => adopted_t += 1,
                Process::SearchSpace => adopted_s += 1,
            }
        }
    }
    let record = GenerationRecord {
        generation: state.generation,
        c_t,
        c_s,
        effectiveness,
        resources: produced,
        endowment: state.endowment,
        iterations: budget.iterations,
        adopted_t,
        adopted_s,
    };
    state.generation += 1;
    GenerationStep::Completed(record)
}

/// Outcome of a whole simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult<R> {
    pub seed: u64,
    pub halt_reason: HaltReason,
    /// Completed generations.
    pub generations: u64,
    pub final_c_t: usize,
    pub final_c_s: usize,
    pub final_distance: usize,
    pub final_effectiveness: R,
    pub final_endowment: R,
    pub max_c_t: usize,
    pub trajectory: Vec<GenerationRecord<R>>,
}

impl<R> RunResult<R> {
    /// Generations survived, with ceiling runs credited the full horizon and
    /// a floor of one.
    pub fn survival(&self, max_generations: u64) -> u64 {
        match self.halt_reason {
            HaltReason::ComplexityCeiling => max_generations,
            _ => self.generations,
        }
        .max(1)
    }

    pub fn is_alive(&self) -> bool {
        self.halt_reason != HaltReason::AbsorbingBarrier
    }
}

/// Initial society: independent random strings of `init_complexity` bits,
/// technological system first.
pub fn initial_state<R: Real, G: Rng + ?Sized>(params: &Params<R>, rng: &mut G) -> SocietyState<R> {
    let t = Bitstring::random(params.init_complexity, rng).expect("validated length");
    let s = Bitstring::random(params.init_complexity, rng).expect("validated length");
    SocietyState::new(t, s, params.endowment)
}

pub fn run_simulation<R: Real>(params: &Params<R>) -> Result<RunResult<R>> {
    params.validate()?;
    let mut rng = RunRng::seed_from_u64(params.seed);
    let mut state = initial_state(params, &mut rng);
    let mut trajectory = Vec::new();
    let mut max_c_t = state.t.len();
    let halt_reason = loop {
        match run_generation(&mut state, params, &mut rng) {
            GenerationStep::Completed(record) => {
                if params.record_every > 0 && record.generation % params.record_every == 0 {
                    trajectory.push(record);
                }
                max_c_t = max_c_t.max(state.t.len());
            }
            GenerationStep::Halted(reason) => break reason,
        }
    };
    Ok(RunResult {
        seed: params.seed,
        halt_reason,
        generations: state.generation,
        final_c_t: state.t.len(),
        final_c_s: state.s.len(),
        final_distance: state.cached_distance,
        final_effectiveness: state.effectiveness().value(),
        final_endowment: state.endowment,
        max_c_t,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{classify_delta, levenshtein_dp, Delta};

    fn bs(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    #[test]
    fn resource_examples() {
        assert_eq!(resources(3, 10, 1.0f64), 10.0);
        assert_eq!(resources(123, 10, 1.0f64), 10.0);
        assert_eq!(resources(7, 5, 0.0f64), -7.0);
        assert_eq!(resources(4, 4, 0.75f64), 2.0);
    }

    #[test]
    fn budget_examples() {
        assert_eq!(
            iteration_budget(10.0f64, 100.0),
            Budget { iterations: 10, endowment: 100.0, barrier: false }
        );
        assert_eq!(
            iteration_budget(-2.0f64, 100.0),
            Budget { iterations: 1, endowment: 98.0, barrier: false }
        );
        assert_eq!(
            iteration_budget(-0.5f64, 0.0),
            Budget { iterations: 0, endowment: 0.0, barrier: true }
        );
        assert_eq!(iteration_budget(0.4f64, 5.0).iterations, 1);
        assert_eq!(iteration_budget(0.0f64, 5.0), Budget { iterations: 1, endowment: 5.0, barrier: false });
        assert!(iteration_budget(0.0f64, 0.0).barrier);
        assert!(!iteration_budget(0.5f64, -3.0).barrier);
    }

    #[test]
    fn alternative_budget_rules() {
        let round = BudgetRule { rounding: IterationRounding::Round, charge: EndowmentCharge::Deficit };
        assert_eq!(round.apply(2.6f64, 1.0).iterations, 3);
        assert_eq!(round.apply(0.2f64, 1.0).iterations, 1);
        let funded = BudgetRule { rounding: IterationRounding::Floor, charge: EndowmentCharge::DeficitPlusFunding };
        assert_eq!(funded.apply(-2.0f64, 100.0).endowment, 97.0);
    }

    #[test]
    fn deficit_draws_accumulate_exactly() {
        // a society stuck at R = -2 pays 2 per generation until it runs dry
        let mut endowment = 100.0f64;
        let mut generations = 0;
        loop {
            let b = iteration_budget(-2.0, endowment);
            if b.barrier {
                break;
            }
            assert_eq!(b.iterations, 1);
            assert_eq!(endowment - b.endowment, 2.0);
            endowment = b.endowment;
            generations += 1;
        }
        assert_eq!(generations, 50);
        assert_eq!(endowment, 0.0);
    }

    #[test]
    fn adoption_rates() {
        let mut rng = RunRng::seed_from_u64(1);
        assert!((0..1000).all(|_| adopt_decision(true, 0.99f64, &mut rng)));
        assert!((0..1000).all(|_| adopt_decision(false, 0.0f64, &mut rng)));
        assert!((0..1000).all(|_| !adopt_decision(false, 1.0f64, &mut rng)));
        let n = 100_000;
        let hits = (0..n).filter(|_| adopt_decision(false, 0.7f64, &mut rng)).count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.3).abs() <= 0.006, "rate {rate}");
    }

    #[test]
    fn params_validation_names_fields() {
        let mut p = Params::<f64>::default();
        assert!(p.validate().is_ok());
        p.eta = 1.5;
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("eta"), "{err}");
        let p = Params::<f64> { max_complexity: 2, ..Params::default() };
        assert!(p.validate().unwrap_err().to_string().contains("max_complexity"));
        let p = Params::<f64> { init_complexity: 0, ..Params::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn full_selection_keeps_non_improving_state() {
        let params = Params::<f64> { eta: 1.0, lambda: 1.0, ..Params::default() };
        let mut rng = RunRng::seed_from_u64(3);
        // a perfect fit cannot be improved, so nothing is ever adopted
        let mut state = SocietyState::new(bs("0110"), bs("0110"), 100.0);
        let before = state.clone();
        for _ in 0..500 {
            let o = step_iteration(&mut state, &params, &mut rng);
            assert!(!o.adopted);
        }
        assert_eq!(state, before);
    }

    #[test]
    fn zero_strength_adopts_everything() {
        let params = Params::<f64> { eta: 0.0, lambda: 0.0, ..Params::default() };
        let mut rng = RunRng::seed_from_u64(4);
        let mut state = SocietyState::new(bs("0110"), bs("1"), 100.0);
        for _ in 0..2_000 {
            assert!(step_iteration(&mut state, &params, &mut rng).adopted);
            assert_eq!(state.cached_distance, levenshtein(&state.t, &state.s));
        }
    }

    /// Straightforward iteration: classify on the full effectiveness change,
    /// then decide. Must consume the stream identically.
    fn reference_step(state: &mut SocietyState<f64>, params: &Params<f64>, rng: &mut RunRng) {
        let tech = rng.gen::<bool>();
        let (target, other, strength) = if tech {
            (&state.t, &state.s, params.eta)
        } else {
            (&state.s, &state.t, params.lambda)
        };
        let Some(p) = sample_proposal_with(target.len(), params.remove_policy, rng) else {
            let _ = adopt_decision(false, strength, rng);
            return;
        };
        let edited = target.apply(&p).unwrap();
        let (delta, d) = classify_delta(target, other, state.cached_distance, &edited);
        if adopt_decision(delta == Delta::Improved, strength, rng) {
            if tech {
                state.t = edited;
            } else {
                state.s = edited;
            }
            state.cached_distance = d;
        }
    }

    #[test]
    fn lazy_step_matches_reference() {
        for (seed, eta, lambda) in [(1, 0.9, 0.8), (2, 0.3, 0.99), (3, 0.99, 0.01), (4, 1.0, 0.5)] {
            let params = Params::<f64> { eta, lambda, ..Params::default() };
            let mut rng_a = RunRng::seed_from_u64(seed);
            let mut rng_b = RunRng::seed_from_u64(seed);
            let mut a = initial_state(&params, &mut rng_a);
            let mut b = initial_state(&params, &mut rng_b);
            for _ in 0..20_000 {
                step_iteration(&mut a, &params, &mut rng_a);
                reference_step(&mut b, &params, &mut rng_b);
                assert_eq!(a, b);
            }
            assert_eq!(a.cached_distance, levenshtein(&a.t, &a.s));
        }
    }

    #[test]
    fn tracked_step_matches_reference_on_long_strings() {
        for (seed, eta, lambda, len) in [(7, 0.9, 0.8, 700), (8, 0.2, 0.3, 400), (9, 0.99, 0.6, 300)] {
            let params = Params::<f64> { eta, lambda, ..Params::default() };
            let mut rng = RunRng::seed_from_u64(seed);
            let t = Bitstring::random(len, &mut rng).unwrap();
            let s = Bitstring::random(len - 37, &mut rng).unwrap();
            let mut a = SocietyState::new(t, s, 10.0);
            let mut b = a.clone();
            let mut rng_a = RunRng::seed_from_u64(seed);
            let mut rng_b = RunRng::seed_from_u64(seed);
            for i in 0..6_000 {
                step_iteration(&mut a, &params, &mut rng_a);
                reference_step(&mut b, &params, &mut rng_b);
                assert_eq!((&a.t, &a.s, a.cached_distance), (&b.t, &b.s, b.cached_distance), "iteration {i}");
            }
            assert!(a.tracker.0.is_some());
            assert_eq!(a.cached_distance, levenshtein_dp(&a.t, &a.s));
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let params = Params::<f64>::with_strengths(0.6, 0.6);
        let run = |seed| {
            let mut rng = RunRng::seed_from_u64(seed);
            let mut state = SocietyState::new(bs("0101101"), bs("1100"), 100.0);
            for _ in 0..1_000 {
                step_iteration(&mut state, &params, &mut rng);
            }
            state
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn ceiling_halts_immediately() {
        let params = Params::<f64>::default();
        let mut rng = RunRng::seed_from_u64(5);
        let big = Bitstring::from_bits(std::iter::repeat_n(true, 10_000)).unwrap();
        let mut state = SocietyState::new(big.clone(), bs("1"), 100.0);
        assert_eq!(
            run_generation(&mut state, &params, &mut rng),
            GenerationStep::Halted(HaltReason::ComplexityCeiling)
        );
        let mut state = SocietyState::new(bs("1"), big, 100.0);
        assert_eq!(
            run_generation(&mut state, &params, &mut rng),
            GenerationStep::Halted(HaltReason::ComplexityCeiling)
        );
    }

    #[test]
    fn perfect_fit_budgets_search_space_length() {
        let params = Params::<f64>::default();
        let mut rng = RunRng::seed_from_u64(6);
        let s = bs("1011001110");
        let mut state = SocietyState::new(s.clone(), s, 100.0);
        match run_generation(&mut state, &params, &mut rng) {
            GenerationStep::Completed(r) => {
                assert_eq!(r.iterations, 10);
                assert_eq!(r.resources, 10.0);
                assert_eq!(r.endowment, 100.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exhausted_society_hits_barrier() {
        let params = Params::<f64>::default();
        let mut rng = RunRng::seed_from_u64(7);
        let mut state = SocietyState::new(bs("00"), bs("11"), 0.0);
        assert_eq!(
            run_generation(&mut state, &params, &mut rng),
            GenerationStep::Halted(HaltReason::AbsorbingBarrier)
        );
        assert_eq!(state.generation, 0);
    }

    #[test]
    fn zero_generation_limit_yields_empty_run() {
        let params = Params::<f64> { max_generations: 0, ..Params::default() };
        let r = run_simulation(&params).unwrap();
        assert_eq!(r.halt_reason, HaltReason::MaxGenerations);
        assert!(r.trajectory.is_empty());
        assert_eq!(r.generations, 0);
        assert_eq!(r.survival(0), 1);
    }

    #[test]
    fn invalid_params_fail_before_running() {
        let params = Params::<f64> { lambda: -0.1, ..Params::default() };
        assert!(run_simulation(&params).unwrap_err().is_config_error());
    }

    #[test]
    fn runs_are_reproducible_and_f32_works() {
        let params = Params::<f64> { seed: 42, max_generations: 500, ..Params::with_strengths(0.8, 0.8) };
        assert_eq!(run_simulation(&params).unwrap(), run_simulation(&params).unwrap());
        let params = Params::<f32> { seed: 42, max_generations: 500, ..Params::with_strengths(0.8, 0.8) };
        let r = run_simulation(&params).unwrap();
        assert_eq!(r, run_simulation(&params).unwrap());
        assert!(r.generations >= 1);
    }

    #[test]
    fn thinning_keeps_every_nth_generation() {
        let params = Params::<f64> { seed: 3, max_generations: 200, record_every: 7, ..Params::with_strengths(0.99, 0.99) };
        let r = run_simulation(&params).unwrap();
        assert!(r.trajectory.iter().all(|g| g.generation % 7 == 0));
        assert_eq!(r.trajectory.len() as u64, r.generations.div_ceil(7));
    }
}
