//! Maximum ε-separated sets in a finite metric space, as maximum independent
//! sets of the conflict graph `{x, x'}: ρ(x, x') < ε`.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packing {
    pub set: Vec<usize>,
    pub exact: bool,
    pub nodes: u64,
}

impl Packing {
    pub fn size(&self) -> usize {
        self.set.len()
    }
}

pub const DEFAULT_NODE_BUDGET: u64 = 1 << 20;

type Bits = Vec<u64>;


fn set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn clear(b: &mut Bits, i: usize) {
    b[i / 64] &= !(1 << (i % 64));
}

fn ones(b: &Bits) -> impl Iterator<Item = usize> + '_ {
    b.iter().enumerate().flat_map(|(w, &x)| {
        let mut x = x;
        std::iter::from_fn(move || {
            if x == 0 {
                return None;
            }
            let t = x.trailing_zeros() as usize;
            x &= x - 1;
            Some(w * 64 + t)
        })
    })
}

fn count(b: &Bits) -> usize {
    b.iter().map(|x| x.count_ones() as usize).sum()
}

/// Conflict adjacency lists.
fn conflicts(n: usize, dist: &impl Fn(usize, usize) -> f64, eps: f64) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dist(i, j) < eps {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Scan in index order, keeping every point at distance `≥ ε` from the
/// points kept so far. The result is a maximal separated set.
pub fn greedy_separated(n: usize, dist: impl Fn(usize, usize) -> f64, eps: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..n {
        if kept.iter().all(|&k| dist(i, k) >= eps) {
            kept.push(i);
        }
    }
    kept
}

/// Exact maximum ε-separated set by branch-and-bound over the connected
/// components of the conflict graph, with greedy clique-cover bounds. Stops
/// after `budget` search nodes and returns the best set found, flagged
/// inexact.
pub fn max_separated(n: usize, dist: impl Fn(usize, usize) -> f64, eps: f64, budget: u64) -> Packing {
    let adj = conflicts(n, &dist, eps);
    let mut seen = vec![false; n];
    let mut out = Packing { set: Vec::new(), exact: true, nodes: 0 };
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut i = 0;
        while i < comp.len() {
            for &j in &adj[comp[i]] {
                if !seen[j] {
                    seen[j] = true;
                    comp.push(j);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        let left = budget.saturating_sub(out.nodes);
        let (best, exact, nodes) = component_mis(&comp, &adj, left);
        out.set.extend(best);
        out.exact &= exact;
        out.nodes += nodes;
    }
    out.set.sort_unstable();
    out
}

fn component_mis(comp: &[usize], adj: &[Vec<usize>], budget: u64) -> (Vec<usize>, bool, u64) {
    let k = comp.len();
    if k == 1 {
        return (comp.to_vec(), true, 0);
    }
    let words = k.div_ceil(64);
    let local = |g: usize| comp.binary_search(&g).expect("in component");
    let mut conflict: Vec<Bits> = vec![vec![0; words]; k];
    for (a, &g) in comp.iter().enumerate() {
        for &h in &adj[g] {
            set(&mut conflict[a], local(h));
        }
    }
    let mut search = Search { conflict: &conflict, best: greedy_mis(&conflict), nodes: 0, budget, exhausted: false };
    let mut all = vec![0u64; words];
    for i in 0..k {
        set(&mut all, i);
    }
    search.expand(&mut Vec::new(), all);
    let best = search.best.iter().map(|&a| comp[a]).collect();
    (best, !search.exhausted, search.nodes)
}

/// Repeatedly take the candidate with the fewest remaining conflicts.
fn greedy_mis(conflict: &[Bits]) -> Vec<usize> {
    let k = conflict.len();
    let mut alive = vec![0u64; k.div_ceil(64)];
    for i in 0..k {
        set(&mut alive, i);
    }
    let mut out = Vec::new();
    while count(&alive) > 0 {
        let v = ones(&alive)
            .min_by_key(|&v| conflict[v].iter().zip(&alive).map(|(a, b)| (a & b).count_ones()).sum::<u32>())
            .expect("nonempty");
        out.push(v);
        clear(&mut alive, v);
        for (a, c) in alive.iter_mut().zip(&conflict[v]) {
            *a &= !c;
        }
    }
    out.sort_unstable();
    out
}

struct Search<'a> {
    conflict: &'a [Bits],
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl Search<'_> {
    /// Candidates sorted by the number of conflict cliques needed to cover
    /// the candidates up to them; an independent set meets each clique once.
    fn cliques(&self, p: &Bits) -> (Vec<usize>, Vec<usize>) {
        let mut left = p.clone();
        let mut order = Vec::new();
        let mut bound = Vec::new();
        let mut c = 0;
        while count(&left) > 0 {
            c += 1;
            let mut clique_cands = left.clone();
            loop {
                let Some(v) = ones(&clique_cands).next() else { break };
                order.push(v);
                bound.push(c);
                clear(&mut left, v);
                clear(&mut clique_cands, v);
                for (a, b) in clique_cands.iter_mut().zip(&self.conflict[v]) {
                    *a &= b;
                }
            }
        }
        (order, bound)
    }

    fn expand(&mut self, current: &mut Vec<usize>, mut p: Bits) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        let (order, bound) = self.cliques(&p);
        for idx in (0..order.len()).rev() {
            if current.len() + bound[idx] <= self.best.len() || self.exhausted {
                return;
            }
            let v = order[idx];
            current.push(v);
            let next: Bits = p.iter().zip(&self.conflict[v]).map(|(a, b)| a & !b).collect();
            let mut next = next;
            clear(&mut next, v);
            if count(&next) == 0 {
                if current.len() > self.best.len() {
                    self.best = current.clone();
                    self.best.sort_unstable();
                }
            } else {
                self.expand(current, next);
            }
            current.pop();
            clear(&mut p, v);
        }
    }
}

/// A cover by sets of diameter `< ε`: greedy balls of radius `ε/2` around
/// the points of a maximal `ε/2`-separated set. Its size lies between
/// `N_ε` and `N_{ε/2}`.
pub fn ball_cover(n: usize, dist: impl Fn(usize, usize) -> f64, eps: f64) -> Vec<Vec<usize>> {
    let mut covered = vec![false; n];
    let mut groups = Vec::new();
    for c in 0..n {
        if covered[c] {
            continue;
        }
        let g: Vec<usize> = (0..n).filter(|&i| !covered[i] && dist(c, i) < eps / 2.0).collect();
        for &i in &g {
            covered[i] = true;
        }
        groups.push(g);
    }
    groups
}

/// Whether every pair inside a group is at distance `< ε` and the groups
/// cover `0..n`.
pub fn check_mesh(n: usize, dist: impl Fn(usize, usize) -> f64, eps: f64, groups: &[Vec<usize>]) -> bool {
    let mut hit = vec![false; n];
    for g in groups {
        for (a, &i) in g.iter().enumerate() {
            if i >= n {
                return false;
            }
            hit[i] = true;
            if g[a + 1..].iter().any(|&j| dist(i, j) >= eps) {
                return false;
            }
        }
    }
    hit.into_iter().all(|h| h)
}

/// Whether the points are pairwise `ε`-separated.
pub fn check_separated(set: &[usize], dist: impl Fn(usize, usize) -> f64, eps: f64) -> bool {
    set.iter().enumerate().all(|(a, &i)| set[a + 1..].iter().all(|&j| i != j && dist(i, j) >= eps))
}
