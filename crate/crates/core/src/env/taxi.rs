//! The 5x5 taxi domain with a fifth pickup location at the center.
//!
//! Four landmark cells double as destinations; the passenger waits at one of
//! the five pickup locations (the four landmarks plus the center) and must
//! be driven to a destination distinct from their start. Propositions:
//! `p` passenger picked up, `g` taxi at the destination with the passenger
//! aboard, `f` passenger dropped off at the destination.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::letter::{Alphabet, Letter};

use super::{
    direction_distribution, slip_direction, uniform_f64, EnvModel, EnvStateId, LabeledEnv,
    StepOutcome,
};

/// The pickup-deliver task formula over AP `[p, g, f]`.
pub const TAXI_FORMULA: &str = "F (p & F (g & F f))";

/// Landmarks: red, green, yellow, blue. The first four are destinations.
const LANDMARKS: [(usize, usize); 4] = [(0, 0), (0, 4), (4, 0), (4, 3)];
/// Pickup locations: the four landmarks plus the center.
const PICKUPS: [(usize, usize); 5] = [(0, 0), (0, 4), (4, 0), (4, 3), (2, 2)];

/// Classic east-west wall segments, as `((r, c), (r, c + 1))` pairs.
const BASE_WALLS: [((usize, usize), (usize, usize)); 6] = [
    ((0, 1), (0, 2)),
    ((1, 1), (1, 2)),
    ((3, 0), (3, 1)),
    ((4, 0), (4, 1)),
    ((3, 2), (3, 3)),
    ((4, 2), (4, 3)),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaxiVariant {
    Deterministic,
    Noisy,
    /// All four destinations are walled off; the passenger waits at the
    /// center, so pickup stays achievable but delivery does not.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Passenger {
    At(u8),
    InTaxi,
    Delivered,
}

#[derive(Debug, Clone)]
pub struct TaxiWorld {
    alphabet: Alphabet,
    variant: TaxiVariant,
    noise: f64,
    horizon: usize,
    walls: Vec<((usize, usize), (usize, usize))>,
    taxi: (usize, usize),
    passenger: Passenger,
    dest: u8,
    rng: ChaCha8Rng,
}

/// Builds the taxi world for a variant (noise 0.1 for `Noisy`, else 0).
pub fn taxi_world(variant: TaxiVariant) -> TaxiWorld {
    let noise = if variant == TaxiVariant::Noisy { 0.1 } else { 0.0 };
    let mut walls: Vec<_> = BASE_WALLS.to_vec();
    if variant == TaxiVariant::Infeasible {
        // seal every destination: block each of its remaining open sides
        walls.extend([
            ((0, 0), (0, 1)),
            ((0, 0), (1, 0)),
            ((0, 3), (0, 4)),
            ((0, 4), (1, 4)),
            ((3, 0), (4, 0)),
            ((3, 3), (4, 3)),
            ((4, 3), (4, 4)),
        ]);
    }
    TaxiWorld {
        alphabet: Alphabet::new(["p", "g", "f"]).expect("fixed alphabet"),
        variant,
        noise,
        horizon: 100,
        walls,
        taxi: (0, 0),
        passenger: Passenger::At(4),
        dest: 0,
        rng: ChaCha8Rng::seed_from_u64(0),
    }
}

impl TaxiWorld {
    pub fn variant(&self) -> TaxiVariant {
        self.variant
    }

    fn blocked(&self, a: (usize, usize), b: (usize, usize)) -> bool {
        self.walls.contains(&(a, b)) || self.walls.contains(&(b, a))
    }

    fn move_target(&self, pos: (usize, usize), dir: usize) -> (usize, usize) {
        let (r, c) = pos;
        let cand = match dir {
            0 if r > 0 => (r - 1, c),
            1 if r < 4 => (r + 1, c),
            2 if c > 0 => (r, c - 1),
            3 if c < 4 => (r, c + 1),
            _ => return pos,
        };
        if self.blocked(pos, cand) {
            pos
        } else {
            cand
        }
    }

    fn encode(&self, taxi: (usize, usize), passenger: Passenger, dest: u8) -> EnvStateId {
        let pcode = match passenger {
            Passenger::At(i) => i as u64,
            Passenger::InTaxi => 5,
            Passenger::Delivered => 6,
        };
        (((taxi.0 * 5 + taxi.1) as u64 * 7) + pcode) * 4 + dest as u64
    }

    /// Pure transition on full state; `dir_or_act < 4` is an already-resolved
    /// movement direction, 4/5 are pickup/dropoff.
    fn apply(
        &self,
        taxi: (usize, usize),
        passenger: Passenger,
        dest: u8,
        dir_or_act: usize,
    ) -> ((usize, usize), Passenger, Letter) {
        let empty = self.alphabet.empty_letter();
        match dir_or_act {
            0..=3 => {
                let next = self.move_target(taxi, dir_or_act);
                let label = if passenger == Passenger::InTaxi
                    && next != taxi
                    && next == LANDMARKS[dest as usize]
                {
                    self.alphabet.letter([1]) // g
                } else {
                    empty
                };
                (next, passenger, label)
            }
            4 => match passenger {
                Passenger::At(i) if PICKUPS[i as usize] == taxi => {
                    (taxi, Passenger::InTaxi, self.alphabet.letter([0])) // p
                }
                _ => (taxi, passenger, empty),
            },
            5 => {
                if passenger == Passenger::InTaxi && taxi == LANDMARKS[dest as usize] {
                    (taxi, Passenger::Delivered, self.alphabet.letter([2])) // f
                } else {
                    (taxi, passenger, empty)
                }
            }
            _ => panic!("taxi actions are 0..6"),
        }
    }

    /// All legal initial `(taxi, passenger location, destination)` triples.
    fn initial_support(&self) -> Vec<((usize, usize), u8, u8)> {
        let mut out = Vec::new();
        for r in 0..5 {
            for c in 0..5 {
                if self.variant == TaxiVariant::Infeasible
                    && LANDMARKS.contains(&(r, c))
                {
                    continue; // taxi must not start inside a sealed corner
                }
                for loc in 0..5u8 {
                    if self.variant == TaxiVariant::Infeasible && loc != 4 {
                        continue;
                    }
                    for dest in 0..4u8 {
                        if loc == dest {
                            continue;
                        }
                        out.push(((r, c), loc, dest));
                    }
                }
            }
        }
        out
    }
}

impl LabeledEnv for TaxiWorld {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn num_actions(&self) -> usize {
        6
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn reset(&mut self, seed: u64) -> (EnvStateId, Letter) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let support = self.initial_support();
        let pick = (uniform_f64(&mut self.rng) * support.len() as f64) as usize;
        let (taxi, loc, dest) = support[pick.min(support.len() - 1)];
        self.taxi = taxi;
        self.passenger = Passenger::At(loc);
        self.dest = dest;
        (
            self.encode(taxi, self.passenger, dest),
            self.alphabet.empty_letter(),
        )
    }

    fn step(&mut self, action: usize) -> StepOutcome {
        assert!(action < 6, "taxi actions are 0..6");
        let resolved = if action < 4 {
            slip_direction(action, self.noise, &mut self.rng)
        } else {
            action
        };
        let (taxi, passenger, label) = self.apply(self.taxi, self.passenger, self.dest, resolved);
        self.taxi = taxi;
        self.passenger = passenger;
        StepOutcome {
            state: self.encode(taxi, passenger, self.dest),
            label,
            env_done: false,
        }
    }

    fn model(&self) -> Option<EnvModel> {
        let support = self.initial_support();
        let p0 = 1.0 / support.len() as f64;
        let mut states: Vec<((usize, usize), Passenger, u8)> = Vec::new();
        let mut index: BTreeMap<EnvStateId, usize> = BTreeMap::new();
        let mut initial = Vec::with_capacity(support.len());
        for &(taxi, loc, dest) in &support {
            let full = (taxi, Passenger::At(loc), dest);
            let id = self.encode(full.0, full.1, full.2);
            let idx = *index.entry(id).or_insert_with(|| {
                states.push(full);
                states.len() - 1
            });
            initial.push((idx, self.alphabet.empty_letter(), p0));
        }
        let mut transitions: Vec<Vec<Vec<(usize, Letter, f64)>>> = Vec::new();
        let mut next = 0usize;
        while next < states.len() {
            let (taxi, passenger, dest) = states[next];
            let mut per_action = Vec::with_capacity(6);
            for action in 0..6 {
                let resolved: Vec<(usize, f64)> = if action < 4 {
                    direction_distribution(action, self.noise)
                } else {
                    vec![(action, 1.0)]
                };
                let mut outcomes: Vec<(usize, Letter, f64)> = Vec::new();
                for (dir, p) in resolved {
                    let (ntaxi, npass, label) = self.apply(taxi, passenger, dest, dir);
                    let id = self.encode(ntaxi, npass, dest);
                    let idx = *index.entry(id).or_insert_with(|| {
                        states.push((ntaxi, npass, dest));
                        states.len() - 1
                    });
                    match outcomes.iter_mut().find(|o| o.0 == idx && o.1 == label) {
                        Some(o) => o.2 += p,
                        None => outcomes.push((idx, label, p)),
                    }
                }
                per_action.push(outcomes);
            }
            transitions.push(per_action);
            next += 1;
        }
        Some(EnvModel {
            num_actions: 6,
            horizon: self.horizon,
            states: states
                .iter()
                .map(|&(t, p, d)| self.encode(t, p, d))
                .collect(),
            initial,
            transitions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Deterministic action script from `from` to `to` respecting walls (BFS).
    fn route(world: &TaxiWorld, from: (usize, usize), to: (usize, usize)) -> Vec<usize> {
        let mut prev: BTreeMap<(usize, usize), ((usize, usize), usize)> = BTreeMap::new();
        let mut queue = alloc::collections::VecDeque::from([from]);
        while let Some(pos) = queue.pop_front() {
            if pos == to {
                break;
            }
            for dir in 0..4 {
                let n = world.move_target(pos, dir);
                if n != pos && n != from && !prev.contains_key(&n) {
                    prev.insert(n, (pos, dir));
                    queue.push_back(n);
                }
            }
        }
        let mut actions = Vec::new();
        let mut cur = to;
        while cur != from {
            let (p, dir) = prev[&cur];
            actions.push(dir);
            cur = p;
        }
        actions.reverse();
        actions
    }

    #[test]
    fn scripted_delivery_emits_p_g_f_in_order() {
        let mut world = taxi_world(TaxiVariant::Deterministic);
        world.reset(3);
        // pin a concrete episode: taxi at center, passenger at red, dest green
        world.taxi = (2, 2);
        world.passenger = Passenger::At(0);
        world.dest = 1;
        let ap = world.alphabet().clone();
        let mut labels = Vec::new();
        for a in route(&world, (2, 2), PICKUPS[0]) {
            labels.push(world.step(a).label);
        }
        labels.push(world.step(4).label); // pickup
        for a in route(&world, PICKUPS[0], LANDMARKS[1]) {
            labels.push(world.step(a).label);
        }
        labels.push(world.step(5).label); // dropoff
        let events: Vec<Letter> = labels
            .iter()
            .copied()
            .filter(|l| *l != ap.empty_letter())
            .collect();
        assert_eq!(
            events,
            vec![ap.letter([0]), ap.letter([1]), ap.letter([2])]
        );
    }

    #[test]
    fn pickup_away_from_passenger_is_a_silent_no_op() {
        let mut world = taxi_world(TaxiVariant::Deterministic);
        world.reset(0);
        world.taxi = (2, 3);
        world.passenger = Passenger::At(0);
        world.dest = 1;
        let before = world.encode(world.taxi, world.passenger, world.dest);
        let out = world.step(4);
        assert_eq!(out.label, world.alphabet().empty_letter());
        assert_eq!(out.state, before);
    }

    #[test]
    fn dropoff_off_destination_keeps_passenger_aboard() {
        let mut world = taxi_world(TaxiVariant::Deterministic);
        world.reset(0);
        world.taxi = (2, 2);
        world.passenger = Passenger::InTaxi;
        world.dest = 0;
        let out = world.step(5);
        assert_eq!(out.label, world.alphabet().empty_letter());
        assert_eq!(world.passenger, Passenger::InTaxi);
        let _ = out;
    }

    #[test]
    fn classic_walls_block_movement() {
        let world = taxi_world(TaxiVariant::Deterministic);
        assert_eq!(world.move_target((0, 1), 3), (0, 1));
        assert_eq!(world.move_target((0, 2), 2), (0, 2));
        assert_eq!(world.move_target((4, 0), 3), (4, 0));
        assert_eq!(world.move_target((2, 1), 3), (2, 2));
    }

    #[test]
    fn infeasible_variant_seals_every_destination() {
        let world = taxi_world(TaxiVariant::Infeasible);
        for dest in LANDMARKS {
            for dir in 0..4 {
                // no neighbor can step into the destination
                for r in 0..5 {
                    for c in 0..5 {
                        if (r, c) != dest {
                            assert_ne!(world.move_target((r, c), dir), dest);
                        }
                    }
                }
            }
        }
        // the passenger is still reachable: center pickup succeeds
        let mut w = taxi_world(TaxiVariant::Infeasible);
        w.reset(11);
        w.taxi = (2, 2);
        let out = w.step(4);
        assert_eq!(out.label, w.alphabet().letter([0]));
    }

    #[test]
    fn model_matches_sampled_steps() {
        let mut world = taxi_world(TaxiVariant::Noisy);
        let model = world.model().unwrap();
        let (state, _) = world.reset(5);
        let mut idx = model.index_of(state).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for probe in 0..10_000 {
            let action = ((uniform_f64(&mut rng) * 6.0) as usize).min(5);
            let out = world.step(action);
            let hit = model.transitions[idx][action]
                .iter()
                .find(|&&(s, l, p)| model.states[s] == out.state && l == out.label && p > 0.0);
            idx = hit.unwrap_or_else(|| panic!("unsupported outcome at probe {probe}")).0;
            if probe % 37 == 36 {
                let (s, _) = world.reset(probe as u64);
                idx = model.index_of(s).unwrap();
            }
        }
    }

    #[test]
    fn initial_distribution_excludes_degenerate_trips() {
        let world = taxi_world(TaxiVariant::Deterministic);
        let support = world.initial_support();
        assert_eq!(support.len(), 25 * (4 * 3 + 4));
        assert!(support.iter().all(|&(_, loc, dest)| loc != dest));
    }
}
