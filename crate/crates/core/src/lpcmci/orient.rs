//! Orientation phase: unshielded colliders, then Zhang's rules to a fixpoint.
//!
//! Rules only ever replace circle marks, so time-order arrowheads and marks
//! implied by background knowledge survive.

use std::collections::BTreeSet;

use super::Mark::{Arrow, Circle, Tail};
use super::{Node, Window};

// Guards the path enumerations of R9 and R10 on dense graphs.
const PATH_BUDGET: usize = 200_000;

pub(super) fn orient(w: &mut Window) {
    colliders(w);
    loop {
        let mut changed = false;
        changed |= r1(w);
        changed |= r2(w);
        changed |= r3(w);
        changed |= r4(w);
        changed |= r8(w);
        changed |= r9(w);
        changed |= r10(w);
        if !changed {
            break;
        }
    }
}

fn is(w: &Window, a: Node, b: Node, m: super::Mark) -> bool {
    w.mark(a, b) == Some(m)
}

// Decisions are collected first so the result does not depend on visit order.
fn colliders(w: &mut Window) {
    let mut heads = BTreeSet::new();
    for z in w.all_nodes() {
        let nb = w.neighbors(z);
        for (i, &x) in nb.iter().enumerate() {
            for &y in &nb[i + 1..] {
                if !w.adjacent(x, y) && !w.in_sepset(x, y, z) {
                    heads.insert((x, z));
                    heads.insert((y, z));
                }
            }
        }
    }
    for (a, b) in heads {
        w.orient(a, b, Arrow);
    }
}

// A *→ B ◦–* C, A and C not adjacent  ⇒  B → C.
fn r1(w: &mut Window) -> bool {
    let mut changed = false;
    for b in w.all_nodes() {
        let nb = w.neighbors(b);
        for &a in &nb {
            if !is(w, a, b, Arrow) {
                continue;
            }
            for &c in &nb {
                if c != a && !w.adjacent(a, c) && is(w, c, b, Circle) {
                    changed |= w.orient(c, b, Tail);
                    changed |= w.orient(b, c, Arrow);
                }
            }
        }
    }
    changed
}

// A → B *→ C or A *→ B → C, with A *–◦ C  ⇒  A *→ C.
fn r2(w: &mut Window) -> bool {
    let mut changed = false;
    for a in w.all_nodes() {
        for c in w.neighbors(a) {
            if !is(w, a, c, Circle) {
                continue;
            }
            let hit = w.neighbors(a).into_iter().any(|b| {
                b != c
                    && w.adjacent(b, c)
                    && ((is(w, b, a, Tail) && is(w, a, b, Arrow) && is(w, b, c, Arrow))
                        || (is(w, a, b, Arrow) && is(w, c, b, Tail) && is(w, b, c, Arrow)))
            });
            if hit {
                changed |= w.orient(a, c, Arrow);
            }
        }
    }
    changed
}

// A *→ B ←* C, A *–◦ D ◦–* C, A and C not adjacent, D *–◦ B  ⇒  D *→ B.
fn r3(w: &mut Window) -> bool {
    let mut changed = false;
    for b in w.all_nodes() {
        let nb = w.neighbors(b);
        for &d in &nb {
            if !is(w, d, b, Circle) {
                continue;
            }
            let hit = nb.iter().enumerate().any(|(i, &a)| {
                nb[i + 1..].iter().any(|&c| {
                    a != d
                        && c != d
                        && !w.adjacent(a, c)
                        && is(w, a, b, Arrow)
                        && is(w, c, b, Arrow)
                        && is(w, a, d, Circle)
                        && is(w, c, d, Circle)
                })
            });
            if hit {
                changed |= w.orient(d, b, Arrow);
            }
        }
    }
    changed
}

// Discriminating path ⟨θ, …, α, β, γ⟩ for β with β ◦–* γ.
fn r4(w: &mut Window) -> bool {
    let mut changed = false;
    for gamma in w.all_nodes() {
        for beta in w.neighbors(gamma) {
            if !is(w, gamma, beta, Circle) {
                continue;
            }
            for alpha in w.neighbors(beta) {
                if alpha == gamma || !w.adjacent(alpha, gamma) {
                    continue;
                }
                if !(is(w, beta, alpha, Arrow) && is_parent(w, alpha, gamma)) {
                    continue;
                }
                if let Some(theta) = discriminating_start(w, alpha, beta, gamma) {
                    if w.in_sepset(theta, gamma, beta) {
                        changed |= w.orient(gamma, beta, Tail);
                        changed |= w.orient(beta, gamma, Arrow);
                    } else {
                        changed |= w.orient(alpha, beta, Arrow);
                        changed |= w.orient(gamma, beta, Arrow);
                        changed |= w.orient(beta, gamma, Arrow);
                    }
                    break;
                }
            }
        }
    }
    changed
}

fn is_parent(w: &Window, p: Node, c: Node) -> bool {
    is(w, c, p, Tail) && is(w, p, c, Arrow)
}

// Walks back from α through colliders that are parents of γ until a node
// not adjacent to γ is reached.
fn discriminating_start(w: &Window, alpha: Node, beta: Node, gamma: Node) -> Option<Node> {
    let mut visited: BTreeSet<Node> = [alpha, beta, gamma].into_iter().collect();
    let mut frontier = vec![alpha];
    while let Some(c) = frontier.pop() {
        for q in w.neighbors(c) {
            if visited.contains(&q) || !is(w, q, c, Arrow) {
                continue;
            }
            if !w.adjacent(q, gamma) {
                return Some(q);
            }
            if is(w, c, q, Arrow) && is_parent(w, q, gamma) {
                visited.insert(q);
                frontier.push(q);
            }
        }
    }
    None
}

// A → B → C or A –◦ B → C, with A ◦→ C  ⇒  A → C.
fn r8(w: &mut Window) -> bool {
    let mut changed = false;
    for a in w.all_nodes() {
        for c in w.neighbors(a) {
            if !(is(w, c, a, Circle) && is(w, a, c, Arrow)) {
                continue;
            }
            let hit = w.neighbors(a).into_iter().any(|b| {
                b != c
                    && is(w, b, a, Tail)
                    && (is(w, a, b, Arrow) || is(w, a, b, Circle))
                    && is_parent(w, b, c)
            });
            if hit {
                changed |= w.orient(c, a, Tail);
            }
        }
    }
    changed
}

// Edge usable from `u` to `v` on a potentially directed path.
fn pd(w: &Window, u: Node, v: Node) -> bool {
    w.adjacent(u, v) && !is(w, v, u, Arrow) && !is(w, u, v, Tail)
}

/// First steps `μ` of uncovered potentially directed paths from `from` to
/// `to` that avoid `avoid`.
fn uncovered_pd_first_steps(w: &Window, from: Node, to: Node, avoid: Node) -> BTreeSet<Node> {
    let mut out = BTreeSet::new();
    let mut budget = PATH_BUDGET;
    for mu in w.neighbors(from) {
        if mu == avoid || !pd(w, from, mu) {
            continue;
        }
        if mu == to {
            out.insert(mu);
            continue;
        }
        let mut path = vec![from, mu];
        if extend(w, &mut path, to, avoid, &mut budget) {
            out.insert(mu);
        }
    }
    out
}

fn extend(w: &Window, path: &mut Vec<Node>, to: Node, avoid: Node, budget: &mut usize) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    let last = path[path.len() - 1];
    let prev = path[path.len() - 2];
    for v in w.neighbors(last) {
        if v == avoid || path.contains(&v) || w.adjacent(prev, v) || !pd(w, last, v) {
            continue;
        }
        if v == to {
            return true;
        }
        path.push(v);
        let found = extend(w, path, to, avoid, budget);
        path.pop();
        if found {
            return true;
        }
    }
    false
}

// A ◦→ C and an uncovered p.d. path ⟨A, B, …, C⟩ with B, C not adjacent  ⇒  A → C.
fn r9(w: &mut Window) -> bool {
    let mut changed = false;
    for a in w.all_nodes() {
        for c in w.neighbors(a) {
            if !(is(w, c, a, Circle) && is(w, a, c, Arrow)) {
                continue;
            }
            let mut budget = PATH_BUDGET;
            let hit = w.neighbors(a).into_iter().any(|b| {
                if b == c || w.adjacent(b, c) || !pd(w, a, b) {
                    return false;
                }
                let mut path = vec![a, b];
                extend(w, &mut path, c, a, &mut budget)
            });
            if hit {
                changed |= w.orient(c, a, Tail);
            }
        }
    }
    changed
}

// A ◦→ C, B → C ← D, uncovered p.d. paths A…B and A…D whose first steps
// differ and are not adjacent  ⇒  A → C.
fn r10(w: &mut Window) -> bool {
    let mut changed = false;
    for a in w.all_nodes() {
        for c in w.neighbors(a) {
            if !(is(w, c, a, Circle) && is(w, a, c, Arrow)) {
                continue;
            }
            let parents: Vec<Node> = w
                .neighbors(c)
                .into_iter()
                .filter(|&p| p != a && is_parent(w, p, c))
                .collect();
            if parents.len() < 2 {
                continue;
            }
            let firsts: Vec<BTreeSet<Node>> = parents
                .iter()
                .map(|&p| uncovered_pd_first_steps(w, a, p, c))
                .collect();
            let mut hit = false;
            'outer: for i in 0..parents.len() {
                for j in i + 1..parents.len() {
                    for &mu in &firsts[i] {
                        for &omega in &firsts[j] {
                            if mu != omega && !w.adjacent(mu, omega) {
                                hit = true;
                                break 'outer;
                            }
                        }
                    }
                }
            }
            if hit {
                changed |= w.orient(c, a, Tail);
            }
        }
    }
    changed
}
