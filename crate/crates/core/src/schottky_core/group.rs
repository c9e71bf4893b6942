use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::mobius::MobiusMap;
use super::params::{index_position, SchottkyParams};

/// A reduced word `γ_{a_1} ... γ_{a_k}` in the free generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupWord {
    pub letters: Vec<i32>,
}

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord { letters: Vec::new() }
    }

    pub fn new(letters: Vec<i32>) -> Self {
        GroupWord { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.letters.iter().all(|&a| a != 0) && self.letters.windows(2).all(|w| w[0] != -w[1])
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord {
            letters: self.letters.iter().rev().map(|a| -a).collect(),
        }
    }

    /// Matrix of the word; the rightmost letter acts first.
    pub fn matrix(&self, sp: &SchottkyParams) -> MobiusMap {
        self.letters
            .iter()
            .fold(MobiusMap::identity(), |m, &a| m.compose(&sp.generator_map(a)))
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "Id");
        }
        let parts: Vec<String> = self.letters.iter().map(|a| format!("γ{a}")).collect();
        write!(f, "{}", parts.join("·"))
    }
}

/// Number of reduced words of length at most `l` on `g` generators.
pub fn word_count(g: usize, l: usize) -> usize {
    let mut total = 1usize;
    let mut shell = 2 * g;
    for _ in 1..=l {
        total += shell;
        shell *= 2 * g - 1;
    }
    total
}

/// All reduced words of length `<= l`, ordered by length and then
/// lexicographically with generator order `1, -1, 2, -2, ...`.
pub fn enumerate_group(sp: &SchottkyParams, l: usize) -> Vec<(GroupWord, MobiusMap)> {
    let group = Group::new(sp, l);
    group.words.into_iter().zip(group.maps).collect()
}

/// Enumerated words with their matrices and shell boundaries.
#[derive(Debug, Clone)]
pub struct Group {
    pub words: Vec<GroupWord>,
    pub maps: Vec<MobiusMap>,
    /// `shells[k]` is the index range of the words of length `k`.
    pub shells: Vec<Range<usize>>,
}

impl Group {
    pub fn new(sp: &SchottkyParams, l: usize) -> Self {
        let gens: Vec<(i32, MobiusMap)> = sp
            .signed_indices()
            .into_iter()
            .map(|a| (a, sp.generator_map(a)))
            .collect();
        debug_assert!(gens.iter().enumerate().all(|(i, (a, _))| index_position(*a) == i));
        let n = word_count(sp.genus(), l);
        let mut words = Vec::with_capacity(n);
        let mut maps = Vec::with_capacity(n);
        let mut shells = vec![0..1];
        words.push(GroupWord::identity());
        maps.push(MobiusMap::identity());
        for k in 1..=l {
            let prev = shells[k - 1].clone();
            let start = words.len();
            for i in prev {
                let last = words[i].letters.last().copied();
                for (a, m) in &gens {
                    if last == Some(-a) {
                        continue;
                    }
                    let mut letters = words[i].letters.clone();
                    letters.push(*a);
                    let map = maps[i].compose(m);
                    words.push(GroupWord { letters });
                    maps.push(map);
                }
            }
            shells.push(start..words.len());
        }
        Group { words, maps, shells }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn max_length(&self) -> usize {
        self.shells.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schottky_core::params::Handle;
    use num_complex::Complex64 as C64;

    fn sample(g: usize) -> SchottkyParams {
        let handles = (0..g)
            .map(|i| Handle {
                w_plus: C64::new(1.0 + 3.0 * i as f64, 0.1),
                w_minus: C64::new(-1.0 + 3.0 * i as f64, -0.2),
                rho: C64::new(0.01, 0.002 * i as f64),
            })
            .collect();
        SchottkyParams::new(handles).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(enumerate_group(&sample(2), 0).len(), 1);
        assert_eq!(enumerate_group(&sample(2), 2).len(), 17);
        assert_eq!(word_count(2, 2), 17);
        let g1 = enumerate_group(&sample(1), 3);
        let letters: Vec<Vec<i32>> = g1.iter().map(|(w, _)| w.letters.clone()).collect();
        assert_eq!(
            letters,
            vec![
                vec![],
                vec![1],
                vec![-1],
                vec![1, 1],
                vec![-1, -1],
                vec![1, 1, 1],
                vec![-1, -1, -1]
            ]
        );
    }

    #[test]
    fn ordering_and_matrices() {
        let sp = sample(2);
        let words = enumerate_group(&sp, 3);
        for pair in words.windows(2) {
            let (a, b) = (&pair[0].0, &pair[1].0);
            let ka: Vec<usize> = a.letters.iter().map(|&x| index_position(x)).collect();
            let kb: Vec<usize> = b.letters.iter().map(|&x| index_position(x)).collect();
            assert!(a.len() < b.len() || (a.len() == b.len() && ka < kb));
        }
        for (w, m) in &words {
            assert!(w.is_reduced());
            let scale = m.a.norm().max(m.b.norm()).max(m.c.norm()).max(m.d.norm());
            assert!(w.matrix(&sp).distance(m) < 1e-13 * scale);
            assert!((m.det() - 1.0).norm() < 1e-13 * scale * scale);
        }
    }

    #[test]
    fn word_inverse_gives_identity() {
        let sp = sample(2);
        let w = GroupWord::new(vec![1, 2, -1, -2, 2]);
        let wm = w.matrix(&sp);
        let scale = wm.a.norm().max(wm.b.norm()).max(wm.c.norm()).max(wm.d.norm());
        let m = wm.compose(&w.inverse().matrix(&sp));
        assert!(m.distance(&MobiusMap::identity()) < 1e-12 * scale * scale);
    }
}
