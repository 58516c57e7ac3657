//! Optimal correspondence between reference and candidate blocks.
//!
//! Blocks are paired by text similarity with an exact assignment solver;
//! pairs below the similarity threshold are discarded. Because detection can
//! split or join text at different granularities on the two sides, a
//! budgeted hill-climbing search merges runs of neighboring blocks (in
//! reading order) whenever that strictly raises the total matched similarity.

mod assignment;
mod text;

pub use assignment::{solve_assignment, Assignment, CostMatrix};
pub use text::text_similarity;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::blocks::{BlockSet, Rect, Rgb, TextBlock};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    /// Pairs below this text similarity are treated as unmatched.
    pub threshold: f64,
    /// Maximum number of assignment re-solves spent on merge search.
    pub merge_budget: usize,
    /// Longest run of original blocks that may be merged into one.
    pub max_run: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            threshold: 0.5,
            merge_budget: 50,
            max_run: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub ref_index: usize,
    pub gen_index: usize,
    pub text_sim: f64,
}

/// Pairs plus the unmatched remainders on each side. Indices refer to the
/// post-merge block lists of the [`MatchOutcome`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_ref: Vec<usize>,
    pub unmatched_gen: Vec<usize>,
}

impl Matching {
    pub fn total_similarity(&self) -> f64 {
        self.pairs.iter().map(|p| p.text_sim).sum()
    }
}

/// A partition of one side's blocks into runs of consecutive blocks in
/// reading order. Members are indices into the original [`BlockSet`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergePlan {
    pub runs: Vec<Vec<usize>>,
}

impl MergePlan {
    fn identity(order: &[usize]) -> Self {
        MergePlan {
            runs: order.iter().map(|&i| vec![i]).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.runs.iter().all(|r| r.len() == 1)
    }

    fn merged(&self, start: usize, count: usize) -> MergePlan {
        let mut runs = Vec::with_capacity(self.runs.len() + 1 - count);
        runs.extend_from_slice(&self.runs[..start]);
        runs.push(self.runs[start..start + count].concat());
        runs.extend_from_slice(&self.runs[start + count..]);
        MergePlan { runs }
    }
}

/// A block after merging: a singleton run is the original block unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedBlock {
    pub members: Vec<usize>,
    pub text: String,
    /// Union of member bboxes.
    pub bbox: Rect,
    /// Sum of member bbox areas.
    pub size: f64,
    /// Union-rectangle center, normalized by the screenshot dimensions.
    pub center: (f64, f64),
    /// Member color with the largest total member area.
    pub color: Rgb,
}

impl MergedBlock {
    pub fn from_run(set: &BlockSet, run: &[usize]) -> Self {
        let members: Vec<&TextBlock> = run.iter().map(|&i| &set.blocks[i]).collect();
        if let [single] = members.as_slice() {
            return MergedBlock {
                members: run.to_vec(),
                text: single.text.clone(),
                bbox: single.bbox,
                size: single.bbox.area() as f64,
                center: single.center,
                color: single.text_color,
            };
        }
        let text = members
            .iter()
            .map(|b| b.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let bbox = members
            .iter()
            .fold(Rect::default(), |acc, b| acc.union(&b.bbox));
        let size = members.iter().map(|b| b.bbox.area() as f64).sum();
        let mut weight: Vec<(Rgb, u64)> = Vec::new();
        for b in &members {
            match weight.iter_mut().find(|(c, _)| *c == b.text_color) {
                Some(slot) => slot.1 += b.bbox.area(),
                None => weight.push((b.text_color, b.bbox.area())),
            }
        }
        // First-seen color wins ties, so reading order decides.
        let color = weight
            .iter()
            .fold(None::<(Rgb, u64)>, |best, &(c, w)| match best {
                Some((_, bw)) if bw >= w => best,
                _ => Some((c, w)),
            })
            .map_or(Rgb::BLACK, |(c, _)| c);
        let (w, h) = set.screenshot_dims;
        MergedBlock {
            members: run.to_vec(),
            text,
            bbox,
            size,
            center: bbox.normalized_center(w, h),
            color,
        }
    }
}

/// Result of [`match_blocks`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub matching: Matching,
    pub plan_ref: MergePlan,
    pub plan_gen: MergePlan,
    pub ref_blocks: Vec<MergedBlock>,
    pub gen_blocks: Vec<MergedBlock>,
    /// Total matched similarity after the initial solve and after each
    /// accepted merge; non-decreasing.
    pub trace: Vec<f64>,
    /// Assignment re-solves spent by the merge search.
    pub resolves: usize,
}

fn reading_order(set: &BlockSet) -> Vec<usize> {
    let mut order: Vec<usize> = (0..set.blocks.len()).collect();
    order.sort_by_key(|&i| {
        let b = &set.blocks[i].bbox;
        (b.y, b.x, i)
    });
    order
}

fn materialize(set: &BlockSet, plan: &MergePlan) -> Vec<MergedBlock> {
    plan.runs
        .iter()
        .map(|run| MergedBlock::from_run(set, run))
        .collect()
}

/// Assigns merged blocks by negative text similarity and drops pairs below
/// the threshold.
pub fn match_merged(
    ref_blocks: &[MergedBlock],
    gen_blocks: &[MergedBlock],
    threshold: f64,
) -> Matching {
    let sims = CostMatrix::from_fn(ref_blocks.len(), gen_blocks.len(), |r, g| {
        text_similarity(&ref_blocks[r].text, &gen_blocks[g].text)
    });
    let cost = CostMatrix::from_fn(sims.rows(), sims.cols(), |r, c| -sims.get(r, c));
    let solved = solve_assignment(&cost);
    let mut matched_ref = vec![false; ref_blocks.len()];
    let mut matched_gen = vec![false; gen_blocks.len()];
    let mut pairs = Vec::new();
    for (r, g) in solved.pairs {
        let sim = sims.get(r, g);
        if sim >= threshold {
            matched_ref[r] = true;
            matched_gen[g] = true;
            pairs.push(MatchedPair {
                ref_index: r,
                gen_index: g,
                text_sim: sim,
            });
        }
    }
    Matching {
        pairs,
        unmatched_ref: (0..ref_blocks.len()).filter(|&i| !matched_ref[i]).collect(),
        unmatched_gen: (0..gen_blocks.len()).filter(|&i| !matched_gen[i]).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Ref,
    Gen,
}

struct SearchState<'a> {
    sets: [&'a BlockSet; 2],
    plans: [MergePlan; 2],
    blocks: [Vec<MergedBlock>; 2],
    matching: Matching,
    total: f64,
}

impl SearchState<'_> {
    fn idx(side: Side) -> usize {
        match side {
            Side::Ref => 0,
            Side::Gen => 1,
        }
    }

    /// Current matched similarity of each run on `side` (0 when unmatched).
    fn run_sims(&self, side: Side) -> Vec<f64> {
        let mut sims = vec![0.0; self.blocks[Self::idx(side)].len()];
        for p in &self.matching.pairs {
            let i = match side {
                Side::Ref => p.ref_index,
                Side::Gen => p.gen_index,
            };
            sims[i] = p.text_sim;
        }
        sims
    }

    /// Merge candidates on one side, most promising first. A candidate is a
    /// `(start, count)` window of consecutive runs whose merged text reaches
    /// the threshold against some opposite block. Windows are ordered by how
    /// much that beats the best current member match; the gain is only a hint,
    /// since a perfectly matched member may free its partner for a duplicate.
    fn candidates(&self, side: Side, cfg: &MatchConfig) -> Vec<(usize, usize)> {
        let s = Self::idx(side);
        let runs = &self.plans[s].runs;
        let opposite = &self.blocks[1 - s];
        let sims = self.run_sims(side);
        let mut scored = Vec::new();
        for start in 0..runs.len() {
            let mut members = runs[start].len();
            let mut text = self.blocks[s][start].text.clone();
            let mut best_member = sims[start];
            for count in 2..=runs.len() - start {
                let next = start + count - 1;
                members += runs[next].len();
                if members > cfg.max_run {
                    break;
                }
                text.push(' ');
                text.push_str(&self.blocks[s][next].text);
                best_member = best_member.max(sims[next]);
                let reach = opposite
                    .iter()
                    .map(|o| text_similarity(&text, &o.text))
                    .fold(0.0, f64::max);
                if reach >= cfg.threshold {
                    scored.push((reach - best_member, start, count));
                }
            }
        }
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        scored.into_iter().map(|(_, s, c)| (s, c)).collect()
    }

    fn evaluate(&self, side: Side, plan: &MergePlan, threshold: f64) -> (Vec<MergedBlock>, Matching) {
        let s = Self::idx(side);
        let blocks = materialize(self.sets[s], plan);
        let matching = match side {
            Side::Ref => match_merged(&blocks, &self.blocks[1], threshold),
            Side::Gen => match_merged(&self.blocks[0], &blocks, threshold),
        };
        (blocks, matching)
    }
}

/// Matches two block sets, then runs the merge search and returns the
/// matching with the highest total matched similarity found.
pub fn match_blocks(reference: &BlockSet, generated: &BlockSet, cfg: &MatchConfig) -> MatchOutcome {
    let plan_ref = MergePlan::identity(&reading_order(reference));
    let plan_gen = MergePlan::identity(&reading_order(generated));
    let ref_blocks = materialize(reference, &plan_ref);
    let gen_blocks = materialize(generated, &plan_gen);
    let matching = match_merged(&ref_blocks, &gen_blocks, cfg.threshold);
    let total = matching.total_similarity();
    let mut state = SearchState {
        sets: [reference, generated],
        plans: [plan_ref, plan_gen],
        blocks: [ref_blocks, gen_blocks],
        matching,
        total,
    };
    let mut trace = vec![total];
    let mut budget = cfg.merge_budget;

    // each pair contributes at most 1 and merging only shrinks the sides
    let bound = |st: &SearchState| st.blocks[0].len().min(st.blocks[1].len()) as f64;
    'search: while budget > 0 && state.total < bound(&state) {
        let mut improved = false;
        for side in [Side::Gen, Side::Ref] {
            for (start, count) in state.candidates(side, cfg) {
                if budget == 0 {
                    break 'search;
                }
                budget -= 1;
                let s = SearchState::idx(side);
                let plan = state.plans[s].merged(start, count);
                let (blocks, matching) = state.evaluate(side, &plan, cfg.threshold);
                let total = matching.total_similarity();
                if total > state.total + 1e-12 {
                    debug_assert!(total >= *trace.last().unwrap());
                    state.plans[s] = plan;
                    state.blocks[s] = blocks;
                    state.matching = matching;
                    state.total = total;
                    trace.push(total);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }

    let [plan_ref, plan_gen] = state.plans;
    let [ref_blocks, gen_blocks] = state.blocks;
    MatchOutcome {
        matching: state.matching,
        plan_ref,
        plan_gen,
        ref_blocks,
        gen_blocks,
        trace,
        resolves: cfg.merge_budget - budget,
    }
}

/// Exhaustive search over every pair of contiguous partitions (runs of at
/// most `cfg.max_run` blocks). Exponential; meant as a reference for small
/// inputs.
pub fn exhaustive_merge_optimum(reference: &BlockSet, generated: &BlockSet, cfg: &MatchConfig) -> f64 {
    let ref_plans = all_partitions(&reading_order(reference), cfg.max_run);
    let gen_plans = all_partitions(&reading_order(generated), cfg.max_run);
    let gen_blocks: Vec<Vec<MergedBlock>> =
        gen_plans.iter().map(|p| materialize(generated, p)).collect();
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut best = 0.0f64;
    for (ri, rp) in ref_plans.iter().enumerate() {
        let rb = materialize(reference, rp);
        for (gi, gb) in gen_blocks.iter().enumerate() {
            let total = *cache
                .entry(ri * gen_blocks.len() + gi)
                .or_insert_with(|| match_merged(&rb, gb, cfg.threshold).total_similarity());
            best = best.max(total);
        }
    }
    best
}

fn all_partitions(order: &[usize], max_run: usize) -> Vec<MergePlan> {
    if order.is_empty() {
        return vec![MergePlan { runs: Vec::new() }];
    }
    let gaps = order.len() - 1;
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << gaps) {
        let mut runs = vec![vec![order[0]]];
        for (g, &idx) in order.iter().enumerate().skip(1) {
            if mask & (1 << (g - 1)) != 0 {
                runs.last_mut().unwrap().push(idx);
            } else {
                runs.push(vec![idx]);
            }
        }
        if runs.iter().all(|r| r.len() <= max_run) {
            out.push(MergePlan { runs });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(texts: &[&str]) -> BlockSet {
        // One block per line, stacked vertically in reading order.
        let dims = (1000, 1000);
        let blocks = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                TextBlock::from_bbox(
                    i,
                    *t,
                    Rect::new(10, 10 + 30 * i as u32, 8 * t.len() as u32 + 1, 20),
                    Rgb::BLACK,
                    dims,
                )
            })
            .collect();
        BlockSet::new(blocks, dims)
    }

    #[test]
    fn identical_sets_match_perfectly() {
        let r = set(&["alpha", "beta", "gamma"]);
        let out = match_blocks(&r, &r, &MatchConfig::default());
        assert_eq!(out.matching.pairs.len(), 3);
        assert!(out.matching.pairs.iter().all(|p| p.text_sim == 1.0));
        assert!(out.matching.unmatched_ref.is_empty());
        assert!(out.matching.unmatched_gen.is_empty());
        assert!(out.plan_ref.is_identity() && out.plan_gen.is_identity());
    }

    #[test]
    fn fragmented_candidate_is_merged() {
        let r = set(&["Hello World"]);
        let g = set(&["Hello", "World"]);
        let out = match_blocks(&r, &g, &MatchConfig::default());
        assert_eq!(out.matching.pairs.len(), 1);
        assert_eq!(out.matching.pairs[0].text_sim, 1.0);
        assert_eq!(out.plan_gen.runs, vec![vec![0, 1]]);
        assert_eq!(out.gen_blocks[0].text, "Hello World");
    }

    #[test]
    fn budget_zero_is_plain_assignment() {
        let r = set(&["Hello World"]);
        let g = set(&["Hello", "World"]);
        let cfg = MatchConfig { merge_budget: 0, ..MatchConfig::default() };
        let out = match_blocks(&r, &g, &cfg);
        assert!(out.plan_gen.is_identity());
        assert_eq!(out.resolves, 0);
        let plain = match_merged(&out.ref_blocks, &out.gen_blocks, 0.5);
        assert_eq!(out.matching, plain);
        assert!(out.matching.pairs[0].text_sim < 1.0);
    }

    #[test]
    fn three_fragments_merge_into_one() {
        let r = set(&["a b c d"]);
        let g = set(&["a b", "c", "d"]);
        let out = match_blocks(&r, &g, &MatchConfig::default());
        assert_eq!(out.plan_gen.runs, vec![vec![0, 1, 2]]);
        assert_eq!(out.matching.pairs[0].text_sim, 1.0);
        assert!(out.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn below_threshold_pairs_are_dropped() {
        let out = match_blocks(&set(&["aaaa"]), &set(&["bbbb"]), &MatchConfig::default());
        assert!(out.matching.pairs.is_empty());
        assert_eq!(out.matching.unmatched_ref, vec![0]);
        assert_eq!(out.matching.unmatched_gen, vec![0]);
    }

    #[test]
    fn no_beneficial_merge_keeps_identity() {
        let r = set(&["first line", "second line"]);
        let g = set(&["first line", "second lime"]);
        let out = match_blocks(&r, &g, &MatchConfig::default());
        assert!(out.plan_ref.is_identity() && out.plan_gen.is_identity());
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn empty_sides() {
        let e = set(&[]);
        let r = set(&["x"]);
        let out = match_blocks(&e, &r, &MatchConfig::default());
        assert!(out.matching.pairs.is_empty());
        assert_eq!(out.matching.unmatched_gen, vec![0]);
        let out = match_blocks(&e, &e, &MatchConfig::default());
        assert!(out.ref_blocks.is_empty() && out.gen_blocks.is_empty());
    }

    #[test]
    fn merged_block_geometry() {
        let mut s = set(&["ab", "cdef"]);
        s.blocks[1].text_color = Rgb([200, 0, 0]);
        let m = MergedBlock::from_run(&s, &[0, 1]);
        assert_eq!(m.text, "ab cdef");
        assert_eq!(m.bbox, Rect::new(10, 10, 33, 50));
        assert_eq!(m.size, (17 * 20 + 33 * 20) as f64);
        assert_eq!(m.color, Rgb([200, 0, 0]));
        assert_eq!(m.center, (26.5 / 1000.0, 35.0 / 1000.0));
    }

    #[test]
    fn partitions_enumerate_compositions() {
        assert_eq!(all_partitions(&[0, 1, 2, 3], 5).len(), 8);
        assert_eq!(all_partitions(&[0, 1, 2, 3, 4, 5], 5).len(), 31);
    }
}
