//! Participant-grouped k-fold plans: a participant's responses always travel
//! together, so no individual is ever on both sides of a split.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParticipantId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub k: usize,
    pub seed: u64,
    pub assignment: BTreeMap<ParticipantId, usize>,
}

/// Shuffles the (sorted) participants with `seed` and deals them round-robin
/// into `k` folds.
pub fn make_lpo_folds<'a>(
    participants: impl IntoIterator<Item = &'a ParticipantId>,
    k: usize,
    seed: u64,
) -> Result<CvPlan> {
    let set: BTreeSet<&ParticipantId> = participants.into_iter().collect();
    let mut ids: Vec<&ParticipantId> = set.into_iter().collect();
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if k > ids.len() {
        return Err(Error::invalid(format!(
            "{k} folds requested but only {} participants",
            ids.len()
        )));
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let assignment = ids
        .into_iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i % k))
        .collect();
    Ok(CvPlan {
        k,
        seed,
        assignment,
    })
}

impl CvPlan {
    pub fn fold_of(&self, p: &ParticipantId) -> Option<usize> {
        self.assignment.get(p).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// (train rows, test rows) for `fold`, given each row's participant.
    pub fn split(&self, groups: &[ParticipantId], fold: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, g) in groups.iter().enumerate() {
            match self.fold_of(g) {
                Some(f) if f == fold => test.push(i),
                Some(_) => train.push(i),
                None => {
                    return Err(Error::invalid(format!(
                        "participant {g} is not part of the fold plan"
                    )))
                }
            }
        }
        check_disjoint(groups, &train, &test)?;
        Ok((train, test))
    }
}

/// Fails if any participant owns rows on both sides.
pub fn check_disjoint(groups: &[ParticipantId], train: &[usize], test: &[usize]) -> Result<()> {
    let train_ids: BTreeSet<&ParticipantId> = train.iter().map(|&i| &groups[i]).collect();
    if let Some(&i) = test.iter().find(|&&i| train_ids.contains(&groups[i])) {
        return Err(Error::Numerical(format!(
            "participant {} appears in both train and test",
            groups[i]
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<ParticipantId> {
        (0..n).map(|i| ParticipantId(format!("p{i:03}"))).collect()
    }

    #[test]
    fn balanced_and_deterministic() {
        let p = ids(10);
        let plan = make_lpo_folds(&p, 5, 1).unwrap();
        assert_eq!(plan.fold_sizes(), [2; 5]);
        assert_eq!(plan, make_lpo_folds(&p, 5, 1).unwrap());
        let plan = make_lpo_folds(&ids(260), 5, 3).unwrap();
        assert_eq!(plan.fold_sizes(), [52; 5]);
        let sizes = make_lpo_folds(&ids(13), 4, 3).unwrap().fold_sizes();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn too_many_folds() {
        assert!(make_lpo_folds(&ids(3), 4, 0).is_err());
    }

    #[test]
    fn split_groups_rows() {
        let p = ids(4);
        let groups: Vec<ParticipantId> = p.iter().flat_map(|x| [x.clone(), x.clone()]).collect();
        let plan = make_lpo_folds(&p, 2, 9).unwrap();
        let (train, test) = plan.split(&groups, 0).unwrap();
        assert_eq!(train.len() + test.len(), 8);
        assert!(check_disjoint(&groups, &train, &test).is_ok());
        assert!(check_disjoint(&groups, &[0], &[1]).is_err());
    }
}
