//! Incremental branch-and-merge learning.

use crate::error::{Error, Result};
use crate::model::{Branch, Hyperparameters, Xtructure};
use crate::score::{branch_distance_split, normalize, split, FitScore};

/// What happened when a tuple was learned.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    /// Fit of the tuple against the model as it stood before learning it;
    /// `None` for the first tuple.
    pub score: Option<FitScore>,
    pub seeded_new_branch: bool,
    /// Pairwise fit of the branches merged to respect the branch cap.
    pub merged_at: Option<f64>,
}

impl Xtructure {
    pub fn learn_tuple(&mut self, tuple: &str) -> Result<LearnOutcome> {
        if tuple.is_empty() {
            return Err(Error::EmptyTuple);
        }
        if let Some(c) = tuple.chars().find(|c| !c.is_ascii()) {
            return Err(Error::NonAsciiInput(c));
        }
        let cfg = self.scoring();
        let (tokens, delims) = split(tuple, &self.params.delimiters);
        let mut best: Option<(usize, FitScore)> = None;
        for (i, b) in self.branches.iter().enumerate() {
            let raw = branch_distance_split(&tokens, &delims, b, &cfg);
            let score = FitScore::new(raw, tuple.len());
            if best.is_none_or(|(_, s)| raw < s.raw_distance) {
                best = Some((i, score));
            }
        }

        let outcome_score = best.map(|(_, s)| s);
        let joins = best.filter(|(_, s)| {
            let value = if cfg.normalize { s.normalized } else { s.raw_distance };
            value < self.branching_threshold
        });
        let seeded_new_branch = match joins {
            Some((i, _)) => {
                self.branches[i].fit(tuple, &self.params)?;
                false
            }
            None => {
                let mut b = Branch::empty();
                b.fit(tuple, &self.params)?;
                self.branches.push(b);
                true
            }
        };
        let merged_at =
            if self.branches.len() > self.params.max_branches { Some(self.merge_closest_pair()) } else { None };
        Ok(LearnOutcome { score: outcome_score, seeded_new_branch, merged_at })
    }

    /// Mean normalized distance of branch `from`'s sample words against
    /// branch `into`.
    pub fn branch_fit(&self, from: usize, into: usize) -> f64 {
        words_fit(&self.branches[from], &self.branches[into], self)
    }

    /// Merge the two branches with the smallest symmetric fit. The lower
    /// support branch is folded into the other; returns the pair's fit.
    fn merge_closest_pair(&mut self) -> f64 {
        let n = self.branches.len();
        let mut best = (0, 1, f64::INFINITY);
        for i in 0..n {
            for j in (i + 1)..n {
                let fit = 0.5 * (self.branch_fit(i, j) + self.branch_fit(j, i));
                if fit < best.2 {
                    best = (i, j, fit);
                }
            }
        }
        let (i, j, fit) = best;
        let (outer, inner) = if self.branches[j].support > self.branches[i].support { (j, i) } else { (i, j) };
        let inner_branch = self.branches.remove(inner);
        let outer = if outer > inner { outer - 1 } else { outer };
        self.branches[outer].absorb(&inner_branch, &self.params);
        if fit > self.branching_threshold {
            self.branching_threshold = fit;
        }
        fit
    }

    /// Fold smaller branches into larger ones while the smaller branch's
    /// sample words fit the larger one under the current threshold. Early
    /// seeds that stopped attracting tuples once the threshold adapted end
    /// up here; the threshold itself is left unchanged.
    pub fn compact(&mut self) {
        while self.branches.len() > 1 {
            let mut best: Option<(usize, usize, f64)> = None;
            for inner in 0..self.branches.len() {
                for outer in 0..self.branches.len() {
                    if inner == outer || self.branches[inner].support > self.branches[outer].support {
                        continue;
                    }
                    let fit = self.branch_fit(inner, outer);
                    if best.is_none_or(|(_, _, f)| fit < f) {
                        best = Some((inner, outer, fit));
                    }
                }
            }
            match best {
                Some((inner, outer, fit)) if fit < self.branching_threshold => {
                    let inner_branch = self.branches.remove(inner);
                    let outer = if outer > inner { outer - 1 } else { outer };
                    self.branches[outer].absorb(&inner_branch, &self.params);
                }
                _ => break,
            }
        }
    }

    /// Fold a branch from another model into this one, the same way a tuple
    /// is learned: join the best-fitting branch if it is under the
    /// threshold, otherwise add it and merge if the cap is exceeded.
    fn fold_branch(&mut self, incoming: Branch) {
        let best = self
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| (i, words_fit(&incoming, b, self)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, fit)) if fit < self.branching_threshold => {
                self.branches[i].absorb(&incoming, &self.params);
            }
            _ => self.branches.push(incoming),
        }
        if self.branches.len() > self.params.max_branches {
            self.merge_closest_pair();
        }
    }
}

fn words_fit(from: &Branch, into: &Branch, x: &Xtructure) -> f64 {
    let words = from.sample_words();
    if words.is_empty() {
        return 1.0;
    }
    let cfg = x.scoring();
    let total: f64 = words
        .iter()
        .map(|w| {
            let (tokens, delims) = split(w, &x.params().delimiters);
            normalize(branch_distance_split(&tokens, &delims, into, &cfg), w.chars().count())
        })
        .sum();
    total / words.len() as f64
}

/// CLT-driven early stopping over per-tuple fit scores.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopState {
    pub latest_scores: Vec<f64>,
    /// Means of consecutive groups of `group_size` scores.
    pub all_scores: Vec<f64>,
    pub group_size: usize,
    pub z: f64,
    pub precision: f64,
    pub done: bool,
}

impl Default for EarlyStopState {
    fn default() -> Self {
        EarlyStopState {
            latest_scores: Vec::new(),
            all_scores: Vec::new(),
            group_size: 30,
            z: 1.96,
            precision: 0.1,
            done: false,
        }
    }
}

impl EarlyStopState {
    pub fn needed_sample_size(&self, std: f64) -> usize {
        ((self.z * std / self.precision).powi(2)) as usize
    }

    /// Record a score; returns true once learning may stop.
    pub fn observe(&mut self, score: f64) -> bool {
        if self.done {
            return true;
        }
        self.latest_scores.push(score);
        if self.latest_scores.len() == self.group_size {
            let mean = self.latest_scores.iter().sum::<f64>() / self.group_size as f64;
            self.all_scores.push(mean);
            self.latest_scores.clear();
            if let Some(std) = sample_std(&self.all_scores) {
                if self.all_scores.len() > self.needed_sample_size(std) {
                    self.done = true;
                }
            }
        }
        self.done
    }
}

pub(crate) fn sample_std(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some(var.sqrt())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LearnStats {
    /// Tuples fitted into the model.
    pub consumed: usize,
    /// Empty cells passed over.
    pub skipped_empty: usize,
    pub stopped_early: bool,
}

pub fn learn_column_with_stats<I, S>(
    tuples: I,
    params: &Hyperparameters,
    early_stop: bool,
) -> Result<(Xtructure, LearnStats)>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut x = Xtructure::new(params.clone())?;
    let mut stats = LearnStats::default();
    let mut stopper = EarlyStopState::default();
    for t in tuples {
        let t = t.as_ref();
        if t.is_empty() {
            stats.skipped_empty += 1;
            continue;
        }
        let outcome = x.learn_tuple(t)?;
        stats.consumed += 1;
        if let (true, Some(score)) = (early_stop, outcome.score) {
            if stopper.observe(score.raw_distance) {
                stats.stopped_early = true;
                break;
            }
        }
    }
    if x.is_empty() {
        return Err(Error::EmptySequence);
    }
    x.compact();
    Ok((x, stats))
}

pub fn learn_column<I, S>(tuples: I, params: &Hyperparameters, early_stop: bool) -> Result<Xtructure>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    learn_column_with_stats(tuples, params, early_stop).map(|(x, _)| x)
}

/// Combine models learned on disjoint partitions of a column.
pub fn merge_xtructures(xs: Vec<Xtructure>) -> Result<Xtructure> {
    let mut iter = xs.into_iter();
    let mut acc = iter.next().ok_or(Error::EmptySequence)?;
    let rest: Vec<Xtructure> = iter.collect();
    if rest.iter().any(|x| x.params != acc.params) {
        return Err(Error::HyperparameterMismatch);
    }
    for x in &rest {
        acc.branching_threshold = acc.branching_threshold.max(x.branching_threshold);
    }
    for x in rest {
        let mut branches = x.branches;
        branches.sort_by_key(|b| std::cmp::Reverse(b.support));
        for b in branches {
            acc.fold_branch(b);
        }
    }
    acc.compact();
    Ok(acc)
}

/// Learn with `workers` threads over contiguous chunks, then merge.
pub fn learn_parallel<S>(tuples: &[S], params: &Hyperparameters, workers: usize, early_stop: bool) -> Result<Xtructure>
where
    S: AsRef<str> + Sync,
{
    let workers = workers.max(1);
    if workers == 1 || tuples.len() < 2 * workers {
        return learn_column(tuples.iter().map(|s| s.as_ref()), params, early_stop);
    }
    let chunk = tuples.len().div_ceil(workers);
    let results: Vec<Result<Xtructure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = tuples
            .chunks(chunk)
            .map(|part| scope.spawn(move || learn_column(part.iter().map(|s| s.as_ref()), params, early_stop)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("learner thread panicked")).collect()
    });
    let mut models = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(x) => models.push(x),
            // a chunk of nothing but empty cells
            Err(Error::EmptySequence) => {}
            Err(e) => return Err(e),
        }
    }
    merge_xtructures(models)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::branch_distance;

    fn params() -> Hyperparameters {
        Hyperparameters::default()
    }

    #[test]
    fn first_tuple_seeds_a_branch() {
        let x = learn_column(["AB"], &params(), false).unwrap();
        assert_eq!(x.branches().len(), 1);
        assert_eq!(x.serialize().unwrap(), "AB");
        assert_eq!(x.distance("AB").unwrap().raw_distance, 0.0);
    }

    #[test]
    fn errors() {
        let mut x = Xtructure::new(params()).unwrap();
        assert!(matches!(x.learn_tuple(""), Err(Error::EmptyTuple)));
        assert!(matches!(x.learn_tuple("añ"), Err(Error::NonAsciiInput('ñ'))));
        let none: [&str; 0] = [];
        assert!(matches!(learn_column(none, &params(), false), Err(Error::EmptySequence)));
        assert!(matches!(learn_column(["", ""], &params(), false), Err(Error::EmptySequence)));
    }

    #[test]
    fn fourth_pattern_forces_merge_and_raises_threshold() {
        let mut x = Xtructure::new(params()).unwrap();
        for t in ["AAAA", "1234-5678", "x.y.z", "N/A"] {
            x.learn_tuple(t).unwrap();
        }
        assert_eq!(x.branches().len(), 3);
        assert!(x.branching_threshold() > 0.1);
        assert_eq!(x.total_support(), 4);
    }

    #[test]
    fn mixed_na_and_ids_keep_two_branches() {
        let mut tuples = Vec::new();
        for i in 0..300u64 {
            if i % 5 == 0 {
                tuples.push("N/A".to_string());
            } else {
                tuples.push(format!("{:010}", (i * 2_654_435_761) % 10_000_000_000));
            }
        }
        let x = learn_column(&tuples, &params(), false).unwrap();
        let pattern = x.serialize().unwrap();
        assert!(pattern.contains("N/A"), "{pattern}");
        assert!(pattern.contains('|'), "{pattern}");
    }

    #[test]
    fn joining_never_increases_self_distance() {
        let mut x = Xtructure::new(params()).unwrap();
        for t in ["10/01/2017", "11/12/2016", "03/04/2015", "12/30/1999", "07/07/2007"] {
            let before = x.distance(t).map(|f| f.raw_distance).unwrap_or(f64::INFINITY);
            let out = x.learn_tuple(t).unwrap();
            let after = x.distance(t).unwrap().raw_distance;
            if out.merged_at.is_none() {
                assert!(after <= before);
                if out.seeded_new_branch {
                    assert_eq!(after, 0.0);
                }
            }
        }
    }

    #[test]
    fn early_stop_on_identical_tuples() {
        let tuples = vec!["ABC-123"; 1000];
        let (early, stats) = learn_column_with_stats(&tuples, &params(), true).unwrap();
        let full = learn_column(&tuples, &params(), false).unwrap();
        assert!(stats.stopped_early);
        assert!(stats.consumed < 200, "{stats:?}");
        assert_eq!(early.serialize().unwrap(), full.serialize().unwrap());

        let (_, stats) = learn_column_with_stats(&tuples, &params(), false).unwrap();
        assert_eq!(stats.consumed, 1000);
        assert!(!stats.stopped_early);
    }

    #[test]
    fn early_stop_state_needs_two_groups() {
        let mut s = EarlyStopState::default();
        for _ in 0..30 {
            assert!(!s.observe(0.0));
        }
        assert_eq!(s.all_scores.len(), 1);
        for _ in 0..29 {
            assert!(!s.observe(0.0));
        }
        assert!(s.observe(0.0));
        assert!(s.observe(1.0), "done never reverts");
        assert_eq!(s.needed_sample_size(0.5), 96);
    }

    #[test]
    fn merge_single_is_identity() {
        let x = learn_column(["ab-1", "cd-2", "ef-3"], &params(), false).unwrap();
        let merged = merge_xtructures(vec![x.clone()]).unwrap();
        assert_eq!(merged, x);
    }

    #[test]
    fn merge_with_one_branch_cap_sums_support() {
        let p = Hyperparameters { max_branches: 1, ..params() };
        let a = learn_column(["12345", "23456", "34567"], &p, false).unwrap();
        let b = learn_column(["AB", "CD"], &p, false).unwrap();
        let merged = merge_xtructures(vec![a, b]).unwrap();
        assert_eq!(merged.branches().len(), 1);
        assert_eq!(merged.total_support(), 5);

        // replaying every word serially into one branch gives the same histograms
        let mut serial = Branch::empty();
        for w in ["12345", "23456", "34567", "AB", "CD"] {
            serial.fit(w, &p).unwrap();
        }
        assert_eq!(merged.branches()[0].tokens(), serial.tokens());
    }

    #[test]
    fn merge_rejects_mismatched_params() {
        let a = learn_column(["a"], &params(), false).unwrap();
        let other = Hyperparameters { alpha: 0.5, ..params() };
        let b = learn_column(["a"], &other, false).unwrap();
        assert!(matches!(merge_xtructures(vec![a, b]), Err(Error::HyperparameterMismatch)));
    }

    #[test]
    fn branch_fit_is_mean_over_samples() {
        let x = learn_column(["AAAA", "1234-5678", "x.y.z"], &params(), false).unwrap();
        let cfg = x.scoring();
        let d = &x.params().delimiters;
        let want: f64 = x.branches()[0]
            .sample_words()
            .iter()
            .map(|w| normalize(branch_distance(w, &x.branches()[1], d, &cfg), w.len()))
            .sum::<f64>()
            / x.branches()[0].sample_words().len() as f64;
        assert_eq!(x.branch_fit(0, 1), want);
    }
}
