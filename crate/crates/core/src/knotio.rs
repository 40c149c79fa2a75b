//! Knot diagram input: PD codes, closed braids, Wirtinger presentations and
//! the peripheral (meridian, longitude) pair.
//!
//! PD convention: each crossing is `(a,b,c,d)`, read counterclockwise
//! starting from the incoming under-strand, so the under-strand runs
//! `a → c` and the over-strand joins `b` and `d`. A crossing is positive
//! when the over-strand runs `d → b`. For the standard trefoil
//!
//! ```text
//! PD[(1,4,2,5),(3,6,4,1),(5,2,6,3)]
//! ```
//!
//! every over-strand runs `b → d`, so all three crossings are negative.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupring::{exponent_sum, Word};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PDCode {
    pub crossings: Vec<[u32; 4]>,
    /// Number of distinct edge labels (twice the crossing count).
    pub arc_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub num_generators: usize,
    pub relators: Vec<Word>,
    /// 1-based index of the generator representing the meridian.
    pub meridian: usize,
    pub longitude: Option<Word>,
    pub labels: Vec<String>,
}

impl Presentation {
    pub fn new(num_generators: usize, relators: Vec<Word>) -> Self {
        Self {
            num_generators,
            relators,
            meridian: 1,
            longitude: None,
            labels: (1..=num_generators).map(|i| format!("S{i}")).collect(),
        }
    }

    /// `⟨m, l | m l m⁻¹ l⁻¹⟩`, the fundamental group of the boundary torus.
    pub fn boundary_torus() -> Self {
        let mut p = Self::new(2, vec![Word::new([1, 2, -1, -2])]);
        p.labels = vec!["mu".into(), "lambda".into()];
        p.longitude = Some(Word::generator(2));
        p
    }

    pub fn meridian_word(&self) -> Word {
        Word::generator(self.meridian)
    }
}

/// Per-crossing data extracted by walking the knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingArcs {
    /// 1-based Wirtinger generator indices.
    pub incoming: usize,
    pub outgoing: usize,
    pub over: usize,
    pub sign: i32,
}

/// Result of walking the diagram once along its orientation.
#[derive(Debug, Clone)]
pub struct DiagramWalk {
    pub num_arcs: usize,
    /// Crossings in input order.
    pub crossings: Vec<CrossingArcs>,
    /// Crossing indices in the order they are passed under, starting at
    /// the beginning of arc 1.
    pub under_order: Vec<usize>,
}

impl PDCode {
    pub fn new(crossings: Vec<[u32; 4]>) -> Result<Self> {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for c in &crossings {
            for &l in c {
                if l == 0 {
                    return Err(Error::Parse("arc labels must be positive".into()));
                }
                *counts.entry(l).or_insert(0) += 1;
            }
        }
        let arc_count = counts.keys().next_back().copied().unwrap_or(0);
        for label in 1..=arc_count {
            let count = counts.get(&label).copied().unwrap_or(0);
            if count != 2 {
                return Err(Error::ArcMultiplicity { label, count });
            }
        }
        Ok(Self {
            crossings,
            arc_count,
        })
    }

    pub fn unknot() -> Self {
        Self {
            crossings: Vec::new(),
            arc_count: 0,
        }
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    /// Walk the knot once, numbering Wirtinger arcs in the order met.
    pub fn walk(&self) -> Result<DiagramWalk> {
        let nc = self.crossings.len();
        if nc == 0 {
            return Ok(DiagramWalk {
                num_arcs: 1,
                crossings: Vec::new(),
                under_order: Vec::new(),
            });
        }
        let mut slots: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
        for (k, c) in self.crossings.iter().enumerate() {
            for (p, &l) in c.iter().enumerate() {
                slots.entry(l).or_default().push((k, p));
            }
        }
        let other_slot = |label: u32, from: (usize, usize)| -> (usize, usize) {
            let s = &slots[&label];
            if s[0] == from {
                s[1]
            } else {
                s[0]
            }
        };

        let mut edge_arc: BTreeMap<u32, usize> = BTreeMap::new();
        let mut over_entry: Vec<Option<usize>> = vec![None; nc];
        let mut under_seen = vec![false; nc];
        let mut under_order = Vec::with_capacity(nc);
        let start = (0usize, 2usize);
        let start_edge = self.crossings[0][2];
        let mut arc = 1usize;
        let mut exit = start;
        let mut edge = start_edge;
        let mut steps = 0usize;
        loop {
            edge_arc.insert(edge, arc);
            let (k, p) = other_slot(edge, exit);
            match p {
                0 => {
                    if under_seen[k] {
                        return Err(Error::Orientation { crossing: k });
                    }
                    under_seen[k] = true;
                    under_order.push(k);
                    exit = (k, 2);
                    if exit == start {
                        break;
                    }
                    arc += 1;
                }
                1 | 3 => {
                    if over_entry[k].is_some() {
                        return Err(Error::Orientation { crossing: k });
                    }
                    over_entry[k] = Some(p);
                    exit = (k, (p + 2) % 4);
                }
                _ => return Err(Error::Orientation { crossing: k }),
            }
            edge = self.crossings[exit.0][exit.1];
            steps += 1;
            if steps > 4 * nc + 4 {
                return Err(Error::Orientation { crossing: k });
            }
        }
        if edge_arc.len() != self.arc_count as usize || over_entry.iter().any(|o| o.is_none()) {
            // some strand was never reached: more than one component
            let components = 1 + self.count_unvisited_components(&edge_arc);
            return Err(Error::MultiComponent { components });
        }
        let crossings = self
            .crossings
            .iter()
            .enumerate()
            .map(|(k, c)| CrossingArcs {
                incoming: edge_arc[&c[0]],
                outgoing: edge_arc[&c[2]],
                over: edge_arc[&c[1]],
                sign: if over_entry[k] == Some(3) { 1 } else { -1 },
            })
            .collect();
        Ok(DiagramWalk {
            num_arcs: arc,
            crossings,
            under_order,
        })
    }

    fn count_unvisited_components(&self, visited: &BTreeMap<u32, usize>) -> usize {
        // strands connect slots 0-2 and 1-3; union labels to count components
        let mut parent: BTreeMap<u32, u32> = BTreeMap::new();
        fn find(parent: &mut BTreeMap<u32, u32>, x: u32) -> u32 {
            let p = *parent.get(&x).unwrap_or(&x);
            if p == x {
                x
            } else {
                let r = find(parent, p);
                parent.insert(x, r);
                r
            }
        }
        for c in &self.crossings {
            for (a, b) in [(c[0], c[2]), (c[1], c[3])] {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent.insert(ra, rb);
                }
            }
        }
        let mut roots = std::collections::BTreeSet::new();
        for l in 1..=self.arc_count {
            if !visited.contains_key(&l) {
                roots.insert(find(&mut parent, l));
            }
        }
        roots.len().max(1)
    }

    pub fn writhe(&self) -> Result<i32> {
        Ok(self.walk()?.crossings.iter().map(|c| c.sign).sum())
    }
}

/// Parse `PD[(a,b,c,d),…]` or `BR[strands; i,±i,…]`.
pub fn parse_knot_input(text: &str) -> Result<PDCode> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::EmptyInput);
    }
    let body = |prefix: &str| -> Option<&str> {
        compact
            .strip_prefix(prefix)
            .and_then(|rest| rest.strip_suffix(']'))
    };
    if let Some(inner) = body("PD[") {
        parse_pd_body(inner)
    } else if let Some(inner) = body("BR[") {
        let (strands, word) = parse_braid_body(inner)?;
        braid_closure(strands, &word)
    } else {
        Err(Error::Parse(format!(
            "expected PD[...] or BR[...], got `{}`",
            text.trim()
        )))
    }
}

fn parse_pd_body(inner: &str) -> Result<PDCode> {
    let mut crossings = Vec::new();
    let mut rest = inner;
    while !rest.is_empty() {
        let open = rest
            .strip_prefix('(')
            .ok_or_else(|| Error::Parse(format!("expected `(` at `{rest}`")))?;
        let close = open
            .find(')')
            .ok_or_else(|| Error::Parse("unterminated crossing tuple".into()))?;
        let nums: Vec<u32> = open[..close]
            .split(',')
            .map(|s| {
                s.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad arc label `{s}`")))
            })
            .collect::<Result<_>>()?;
        let tuple: [u32; 4] = nums
            .try_into()
            .map_err(|v: Vec<u32>| Error::Parse(format!("crossing has {} labels", v.len())))?;
        crossings.push(tuple);
        rest = &open[close + 1..];
        if let Some(r) = rest.strip_prefix(',') {
            if r.is_empty() {
                return Err(Error::Parse("trailing comma".into()));
            }
            rest = r;
        } else if !rest.is_empty() {
            return Err(Error::Parse(format!("unexpected `{rest}`")));
        }
    }
    PDCode::new(crossings)
}

fn parse_braid_body(inner: &str) -> Result<(usize, Vec<i32>)> {
    let (s, w) = inner
        .split_once(';')
        .ok_or_else(|| Error::Parse("braid needs `strands; word`".into()))?;
    let strands: usize = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad strand count `{s}`")))?;
    if strands == 0 {
        return Err(Error::Parse("strand count must be positive".into()));
    }
    let word = if w.is_empty() {
        Vec::new()
    } else {
        w.split(',')
            .map(|g| {
                let v: i32 = g
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad braid generator `{g}`")))?;
                if v == 0 || v.unsigned_abs() as usize >= strands {
                    return Err(Error::Parse(format!(
                        "braid generator {v} out of range for {strands} strands"
                    )));
                }
                Ok(v)
            })
            .collect::<Result<_>>()?
    };
    Ok((strands, word))
}

/// PD code of the closure of a braid word (strands run upward; `σᵢ` has
/// the strand from bottom-left crossing over, a positive crossing).
pub fn braid_closure(strands: usize, word: &[i32]) -> Result<PDCode> {
    let mut touched = vec![false; strands];
    for &g in word {
        let i = g.unsigned_abs() as usize;
        touched[i - 1] = true;
        touched[i] = true;
    }
    if word.is_empty() {
        if strands == 1 {
            return Ok(PDCode::unknot());
        }
        return Err(Error::MultiComponent { components: strands });
    }
    let free = touched.iter().filter(|t| !**t).count();
    if free > 0 {
        return Err(Error::MultiComponent {
            components: free + 1,
        });
    }
    let mut cur: Vec<u32> = (1..=strands as u32).collect();
    let mut next = strands as u32 + 1;
    let mut crossings = Vec::with_capacity(word.len());
    for &g in word {
        let i = g.unsigned_abs() as usize;
        let (p, q) = (cur[i - 1], cur[i]);
        let (r, s) = (next, next + 1);
        next += 2;
        crossings.push(if g > 0 { [q, s, r, p] } else { [p, q, s, r] });
        cur[i - 1] = r;
        cur[i] = s;
    }
    let close: BTreeMap<u32, u32> = cur
        .iter()
        .enumerate()
        .map(|(j, &l)| (l, j as u32 + 1))
        .collect();
    for c in crossings.iter_mut() {
        for l in c.iter_mut() {
            if let Some(&m) = close.get(l) {
                *l = m;
            }
        }
    }
    let mut used: Vec<u32> = crossings.iter().flatten().cloned().collect();
    used.sort_unstable();
    used.dedup();
    let relabel: BTreeMap<u32, u32> = used
        .iter()
        .enumerate()
        .map(|(k, &l)| (l, k as u32 + 1))
        .collect();
    for c in crossings.iter_mut() {
        for l in c.iter_mut() {
            *l = relabel[l];
        }
    }
    let pd = PDCode::new(crossings)?;
    pd.walk()?;
    Ok(pd)
}

/// Wirtinger presentation dropping the last crossing's relator.
pub fn wirtinger_presentation(pd: &PDCode) -> Result<Presentation> {
    let drop = pd.crossing_count().checked_sub(1);
    wirtinger_presentation_dropping(pd, drop)
}

/// Wirtinger presentation with the relator of crossing `drop` (0-based)
/// omitted; `None` keeps every relator.
pub fn wirtinger_presentation_dropping(pd: &PDCode, drop: Option<usize>) -> Result<Presentation> {
    let walk = pd.walk()?;
    let relators = walk
        .crossings
        .iter()
        .enumerate()
        .filter(|(k, _)| Some(*k) != drop)
        .map(|(_, c)| crossing_relator(c))
        .collect();
    let mut p = Presentation::new(walk.num_arcs, relators);
    p.longitude = Some(longitude_from_walk(&walk));
    Ok(p)
}

/// `S_over^ε S_in S_over^{-ε} S_out^{-1}`.
pub fn crossing_relator(c: &CrossingArcs) -> Word {
    let o = c.over as i32 * c.sign;
    Word::new([o, c.incoming as i32, -o, -(c.outgoing as i32)])
}

fn longitude_from_walk(walk: &DiagramWalk) -> Word {
    let mut w = Word::identity();
    let mut writhe = 0;
    for &k in &walk.under_order {
        let c = &walk.crossings[k];
        w = Word::new([c.over as i32 * c.sign]).mul(&w);
        writhe += c.sign;
    }
    w.mul(&Word::generator(1).pow(-writhe))
}

/// Preferred longitude based at the start of arc 1; exponent sum zero.
pub fn longitude_word(pd: &PDCode) -> Result<Word> {
    let walk = pd.walk()?;
    let w = longitude_from_walk(&walk);
    debug_assert_eq!(exponent_sum(&w), 0);
    Ok(w)
}

const CATALOG: &str = include_str!("../data/catalog.txt");

/// Names available in the built-in catalog.
pub fn catalog_names() -> Vec<String> {
    catalog_entries().map(|(n, _)| n.to_string()).collect()
}

fn catalog_entries() -> impl Iterator<Item = (&'static str, &'static str)> {
    CATALOG.lines().filter_map(|line| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return None;
        }
        line.split_once(':').map(|(n, v)| (n.trim(), v.trim()))
    })
}

pub fn catalog_lookup(name: &str) -> Result<PDCode> {
    catalog_entries()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownKnot(name.to_string()))
        .and_then(|(_, v)| parse_knot_input(v))
}
