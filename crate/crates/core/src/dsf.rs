//! Design sequence formation and the alternative ordering strategies.
//!
//! A design sequence lists a layout's elements in the order a designer
//! would plausibly place them: logos by reading position, texts by size,
//! and every underlay only after the elements it decorates.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SequenceError;
use crate::geometry::{Element, ElementClass, Layout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "strategy", content = "seed", rename_all = "lowercase")]
pub enum Strategy {
    Dsf,
    Geometric,
    Random(u64),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Dsf => "dsf",
            Strategy::Geometric => "geometric",
            Strategy::Random(_) => "random",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Strategy::Random(seed) => Some(*seed),
            _ => None,
        }
    }

    pub fn apply(&self, layout: &Layout) -> DesignSequence {
        match *self {
            Strategy::Dsf => form_design_sequence(layout),
            Strategy::Geometric => order_geometric(layout),
            Strategy::Random(seed) => order_random(layout, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSequence {
    pub entries: Vec<Element>,
    pub strategy: Strategy,
    pub fitted_length: Option<usize>,
    /// Number of elements in the layout the sequence was formed from.
    pub source_len: usize,
    /// Indices of underlays that decorate nothing; appended at the end.
    pub orphans: Vec<usize>,
}

impl DesignSequence {
    fn new(entries: Vec<Element>, strategy: Strategy) -> Self {
        let source_len = entries.len();
        DesignSequence { entries, strategy, fitted_length: None, source_len, orphans: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries that came from the source layout, i.e. everything but padding.
    pub fn real_entries(&self) -> impl Iterator<Item = &Element> + '_ {
        self.entries.iter().filter(|e| e.class != ElementClass::Pad)
    }

    /// The source layout restricted to this sequence's real entries, in sequence order.
    pub fn to_layout(&self, source: &Layout) -> Layout {
        source.with_elements(self.real_entries().copied().collect())
    }

    /// Truncates or pads to exactly `length` entries.
    pub fn fit_length(&self, length: usize) -> Result<DesignSequence, SequenceError> {
        if length == 0 {
            return Err(SequenceError::ZeroLength);
        }
        let mut entries: Vec<Element> = self.entries.iter().take(length).copied().collect();
        let missing = length - entries.len();
        entries.extend((0..missing).map(|k| Element::pad(self.source_len + k)));
        Ok(DesignSequence { entries, fitted_length: Some(length), ..self.clone() })
    }
}

/// Non-underlay elements that share an underlay, with the underlays decorating them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnderlayGroups {
    /// Element indices of each group, in queue order (logos first, then texts).
    pub groups: Vec<Vec<usize>>,
    /// Underlay indices attached to each group, larger areas first.
    pub attached: Vec<Vec<usize>>,
    /// Underlays attached to no group.
    pub orphans: Vec<usize>,
}

impl UnderlayGroups {
    pub fn group_of(&self, index: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&index))
    }
}

fn overlaps(a: &Element, b: &Element) -> bool {
    a.bbox.intersection_area(&b.bbox) > 0.0
}

fn by_reading_position(a: &Element, b: &Element) -> Ordering {
    a.bbox.y1.total_cmp(&b.bbox.y1).then(a.bbox.x1.total_cmp(&b.bbox.x1)).then(a.index.cmp(&b.index))
}

fn by_area_desc(a: &Element, b: &Element) -> Ordering {
    b.bbox.area().total_cmp(&a.bbox.area()).then(a.index.cmp(&b.index))
}

/// Logos by `(y1, x1)` ascending followed by texts by area descending.
fn instance_queue(layout: &Layout) -> Vec<usize> {
    let els = &layout.elements;
    let mut logos: Vec<usize> = (0..els.len()).filter(|&i| els[i].class == ElementClass::Logo).collect();
    let mut texts: Vec<usize> = (0..els.len()).filter(|&i| els[i].class == ElementClass::Text).collect();
    logos.sort_by(|&a, &b| by_reading_position(&els[a], &els[b]));
    texts.sort_by(|&a, &b| by_area_desc(&els[a], &els[b]));
    logos.extend(texts);
    logos
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Grouping over positions in `layout.elements`.
struct PositionGroups {
    queue: Vec<usize>,
    /// Group id of each queued instance, parallel to `queue`.
    group_of: Vec<usize>,
    groups: Vec<Vec<usize>>,
    attached: Vec<Vec<usize>>,
    orphans: Vec<usize>,
}

fn group_positions(layout: &Layout) -> PositionGroups {
    let els = &layout.elements;
    let queue = instance_queue(layout);
    let underlays: Vec<usize> = (0..els.len()).filter(|&i| els[i].class == ElementClass::Underlay).collect();

    // union-find over queue slots
    let mut parent: Vec<usize> = (0..queue.len()).collect();
    let mut direct_slot: Vec<Option<usize>> = vec![None; underlays.len()];
    for (k, &u) in underlays.iter().enumerate() {
        let touched: Vec<usize> = (0..queue.len()).filter(|&s| overlaps(&els[u], &els[queue[s]])).collect();
        if let Some(&first) = touched.first() {
            for &s in &touched[1..] {
                let (ra, rb) = (find(&mut parent, first), find(&mut parent, s));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
            direct_slot[k] = Some(first);
        }
    }

    let mut root_group: Vec<Option<usize>> = vec![None; queue.len()];
    let mut group_of = Vec::with_capacity(queue.len());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (s, &p) in queue.iter().enumerate() {
        let root = find(&mut parent, s);
        let g = *root_group[root].get_or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(p);
        group_of.push(g);
    }

    let direct_group: Vec<Option<usize>> = direct_slot.iter().map(|slot| slot.map(|s| group_of[s])).collect();

    let mut attached: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];
    let mut reached = vec![false; underlays.len()];
    for (g, attached_g) in attached.iter_mut().enumerate() {
        let mut member = vec![false; underlays.len()];
        let mut stack: Vec<usize> = (0..underlays.len()).filter(|&k| direct_group[k] == Some(g)).collect();
        for &k in &stack {
            member[k] = true;
        }
        // chains pass only through underlays that decorate no element directly
        while let Some(k) = stack.pop() {
            for j in 0..underlays.len() {
                if !member[j] && direct_group[j].is_none() && overlaps(&els[underlays[k]], &els[underlays[j]]) {
                    member[j] = true;
                    stack.push(j);
                }
            }
        }
        for (k, &m) in member.iter().enumerate() {
            if m {
                reached[k] = true;
                attached_g.push(underlays[k]);
            }
        }
        attached_g.sort_by(|&a, &b| by_area_desc(&els[a], &els[b]));
    }

    let mut orphans: Vec<usize> = (0..underlays.len()).filter(|&k| !reached[k]).map(|k| underlays[k]).collect();
    orphans.sort_by(|&a, &b| by_area_desc(&els[a], &els[b]));

    PositionGroups { queue, group_of, groups, attached, orphans }
}

/// Partitions texts and logos into groups that share an overlapping underlay.
///
/// An underlay is attached to a group when it overlaps a member, or when it
/// reaches such an underlay through a chain of overlapping underlays that
/// themselves decorate nothing.
pub fn group_by_underlay(layout: &Layout) -> UnderlayGroups {
    let pg = group_positions(layout);
    let idx = |v: &Vec<usize>| v.iter().map(|&p| layout.elements[p].index).collect::<Vec<_>>();
    UnderlayGroups {
        groups: pg.groups.iter().map(idx).collect(),
        attached: pg.attached.iter().map(idx).collect(),
        orphans: idx(&pg.orphans),
    }
}

/// Orders a layout into a design sequence.
///
/// Logos are queued by `(y1, x1)` ascending, then texts by area descending.
/// Popping the queue emits the popped element's whole underlay group (in
/// queue order) followed by the group's underlays not yet emitted. Orphan
/// underlays go last, larger first, and are recorded in `orphans`.
pub fn form_design_sequence(layout: &Layout) -> DesignSequence {
    let els = &layout.elements;
    let pg = group_positions(layout);
    let mut emitted = vec![false; els.len()];
    let mut order = Vec::with_capacity(els.len());
    for (slot, &p) in pg.queue.iter().enumerate() {
        if emitted[p] {
            continue;
        }
        let g = pg.group_of[slot];
        for &q in pg.groups[g].iter().chain(&pg.attached[g]) {
            if !emitted[q] {
                emitted[q] = true;
                order.push(q);
            }
        }
    }
    order.extend(pg.orphans.iter().copied());

    let mut seq = DesignSequence::new(order.iter().map(|&p| els[p]).collect(), Strategy::Dsf);
    seq.orphans = pg.orphans.iter().map(|&p| els[p].index).collect();
    seq
}

/// All elements by top-left corner: `(y1, x1)` ascending, ties by index.
pub fn order_geometric(layout: &Layout) -> DesignSequence {
    let mut entries = layout.elements.clone();
    entries.sort_by(by_reading_position);
    DesignSequence::new(entries, Strategy::Geometric)
}

/// Seeded uniform permutation.
///
/// Elements are first put in index order, then shuffled in place
/// (Fisher-Yates) by a ChaCha8 generator seeded with `seed` through
/// `SeedableRng::seed_from_u64`.
pub fn order_random(layout: &Layout, seed: u64) -> DesignSequence {
    let mut entries = layout.elements.clone();
    entries.sort_by_key(|e| e.index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    entries.shuffle(&mut rng);
    DesignSequence::new(entries, Strategy::Random(seed))
}

/// Largest element count over a set of layouts; the natural full sequence length.
pub fn max_sequence_length(layouts: &[Layout]) -> usize {
    layouts.iter().map(Layout::len).max().unwrap_or(0)
}
