//! Deterministic enumeration of integer vectors by increasing max-norm.

/// Position `k` in the sequence `0, 1, -1, 2, -2, ...`.
fn centered(k: u64) -> i64 {
    let h = k.div_ceil(2) as i64;
    if k % 2 == 1 {
        h
    } else {
        -h
    }
}

/// Integer vectors in a box `-neg[i] <= c[i] <= pos[i]`, visited shell by shell
/// (increasing `max |c[i]|`), each shell in odometer order over the centered
/// value lists with the first coordinate turning fastest. The output order is
/// fixed by the box alone.
#[derive(Debug, Clone)]
pub struct ShellIter {
    neg: Vec<u64>,
    pos: Vec<u64>,
    max_shell: u64,
    shell: u64,
    /// Values allowed per coordinate in the current shell.
    lists: Vec<Vec<i64>>,
    digits: Vec<usize>,
    fresh: bool,
    done: bool,
}

impl ShellIter {
    /// The cube `[-bound, bound]^dim`.
    pub fn cube(dim: usize, bound: u64) -> Self {
        Self::boxed(vec![bound; dim], vec![bound; dim])
    }

    pub fn boxed(neg: Vec<u64>, pos: Vec<u64>) -> Self {
        assert_eq!(neg.len(), pos.len());
        let max_shell = neg.iter().chain(&pos).copied().max().unwrap_or(0);
        let mut it = ShellIter {
            neg,
            pos,
            max_shell,
            shell: 0,
            lists: vec![],
            digits: vec![],
            fresh: true,
            done: false,
        };
        it.load_shell();
        it
    }

    /// Centered residues modulo each `m[i]`: `c` ranges over `(-m/2, m/2]`.
    pub fn residues(moduli: &[u64]) -> Self {
        let neg = moduli.iter().map(|&m| m.saturating_sub(1) / 2).collect();
        let pos = moduli.iter().map(|&m| m / 2).collect();
        Self::boxed(neg, pos)
    }

    pub fn current_shell(&self) -> u64 {
        self.shell
    }

    fn load_shell(&mut self) {
        let s = self.shell;
        self.lists = self
            .neg
            .iter()
            .zip(&self.pos)
            .map(|(&ng, &ps)| {
                (0..=2 * s)
                    .map(centered)
                    .filter(|&v| {
                        if v >= 0 {
                            v as u64 <= ps
                        } else {
                            v.unsigned_abs() <= ng
                        }
                    })
                    .collect()
            })
            .collect();
        self.digits = vec![0; self.lists.len()];
        self.fresh = true;
    }

    fn advance(&mut self) -> bool {
        for i in 0..self.digits.len() {
            self.digits[i] += 1;
            if self.digits[i] < self.lists[i].len() {
                return true;
            }
            self.digits[i] = 0;
        }
        false
    }
}

impl Iterator for ShellIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        loop {
            if self.done {
                return None;
            }
            let have = if self.fresh {
                self.fresh = false;
                true
            } else {
                self.advance()
            };
            if !have {
                if self.shell >= self.max_shell || self.lists.is_empty() {
                    self.done = true;
                    return None;
                }
                self.shell += 1;
                self.load_shell();
                continue;
            }
            let v: Vec<i64> = self
                .digits
                .iter()
                .zip(&self.lists)
                .map(|(&d, l)| l[d])
                .collect();
            let norm = v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
            if norm == self.shell {
                return Some(v);
            }
        }
    }
}
