//! Evaluation-only sub-goal bookkeeping.
//!
//! A policy earns one point per partition milestone it passes below the
//! episode's starting index, each paid at most once per episode. The
//! normalized return divides by the number of milestones, so a policy that
//! reaches only the first of three sub-goals scores 1/3 and a completing
//! policy scores 1. Task rewards are never touched; this is a reporting
//! metric.

use crate::dfa::StateId;
use crate::metrics::Partition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubgoalRewarder {
    initial_index: usize,
}

impl SubgoalRewarder {
    /// Milestones are the partition indices strictly below that of the
    /// episode's initial automaton state.
    pub fn new(partition: &Partition, initial_state: StateId) -> Self {
        SubgoalRewarder {
            initial_index: partition.index(initial_state),
        }
    }

    pub fn num_subgoals(&self) -> usize {
        self.initial_index
    }

    /// Sub-goals earned given the lowest partition index touched during the
    /// episode.
    pub fn episode_return(&self, min_index_reached: usize) -> usize {
        self.initial_index - min_index_reached.min(self.initial_index)
    }

    /// Earned sub-goals over available ones; 1 for a trivially complete task.
    pub fn normalized_return(&self, min_index_reached: usize) -> f64 {
        if self.initial_index == 0 {
            1.0
        } else {
            self.episode_return(min_index_reached) as f64 / self.initial_index as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfa::{analyze, fixture_dfa};
    use crate::metrics::{distances, partition};

    #[test]
    fn milestone_counting_on_the_fixture_partition() {
        let dfa = fixture_dfa();
        let d = distances(&dfa, &analyze(&dfa));
        let p = partition(&dfa, &d);
        let sg = SubgoalRewarder::new(&p, dfa.initial());
        assert_eq!(sg.num_subgoals(), 2);
        assert_eq!(sg.episode_return(2), 0); // never left the initial set
        assert_eq!(sg.episode_return(3), 0); // trapped counts as no progress
        assert_eq!(sg.episode_return(1), 1);
        assert_eq!(sg.episode_return(0), 2);
        assert_eq!(sg.normalized_return(1), 0.5);
        assert_eq!(sg.normalized_return(0), 1.0);
    }

    #[test]
    fn accepting_start_scores_full_marks() {
        let dfa = fixture_dfa();
        let d = distances(&dfa, &analyze(&dfa));
        let p = partition(&dfa, &d);
        let sg = SubgoalRewarder::new(&p, 4);
        assert_eq!(sg.num_subgoals(), 0);
        assert_eq!(sg.normalized_return(0), 1.0);
    }
}
