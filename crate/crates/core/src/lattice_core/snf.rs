//! Smith normal form with unimodular transforms: `U·A·V = D`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SnfError {
    #[error("integer overflow while reducing to Smith normal form")]
    Overflow,
}

#[derive(Clone, Debug)]
pub struct Smith {
    /// Diagonal entries d₁ | d₂ | … (nonnegative), length min(rows, cols).
    pub diag: Vec<i128>,
    pub u: Vec<Vec<i128>>,
    pub v: Vec<Vec<i128>>,
}

fn ident(n: usize) -> Vec<Vec<i128>> {
    (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect()
}

fn ck(x: Option<i128>) -> Result<i128, SnfError> {
    x.ok_or(SnfError::Overflow)
}

struct Work {
    a: Vec<Vec<i128>>,
    u: Vec<Vec<i128>>,
    v: Vec<Vec<i128>>,
}

impl Work {
    // row_i -= k·row_j (on A and U)
    fn row_sub(&mut self, i: usize, j: usize, k: i128) -> Result<(), SnfError> {
        for m in [&mut self.a, &mut self.u] {
            for c in 0..m[i].len() {
                let t = ck(m[j][c].checked_mul(k))?;
                m[i][c] = ck(m[i][c].checked_sub(t))?;
            }
        }
        Ok(())
    }
    // col_i -= k·col_j (on A and V)
    fn col_sub(&mut self, i: usize, j: usize, k: i128) -> Result<(), SnfError> {
        for m in [&mut self.a, &mut self.v] {
            for row in m.iter_mut() {
                let t = ck(row[j].checked_mul(k))?;
                row[i] = ck(row[i].checked_sub(t))?;
            }
        }
        Ok(())
    }
    fn row_swap(&mut self, i: usize, j: usize) {
        self.a.swap(i, j);
        self.u.swap(i, j);
    }
    fn col_swap(&mut self, i: usize, j: usize) {
        for m in [&mut self.a, &mut self.v] {
            for row in m.iter_mut() {
                row.swap(i, j);
            }
        }
    }
    fn row_neg(&mut self, i: usize) {
        for m in [&mut self.a, &mut self.u] {
            for x in m[i].iter_mut() {
                *x = -*x;
            }
        }
    }
}

pub fn smith(a: &[Vec<i64>]) -> Result<Smith, SnfError> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut w = Work {
        a: a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect(),
        u: ident(rows),
        v: ident(cols),
    };
    let n = rows.min(cols);
    for t in 0..n {
        loop {
            // smallest nonzero entry of the trailing block goes to (t, t)
            let mut best: Option<(usize, usize, i128)> = None;
            for i in t..rows {
                for j in t..cols {
                    let x = w.a[i][j].abs();
                    if x != 0 && best.is_none_or(|(_, _, b)| x < b) {
                        best = Some((i, j, x));
                    }
                }
            }
            let Some((bi, bj, _)) = best else {
                break;
            };
            w.row_swap(t, bi);
            w.col_swap(t, bj);
            let p = w.a[t][t];
            let mut clean = true;
            for i in (t + 1)..rows {
                let k = w.a[i][t].div_euclid(p);
                if k != 0 {
                    w.row_sub(i, t, k)?;
                }
                if w.a[i][t] != 0 {
                    clean = false;
                }
            }
            for j in (t + 1)..cols {
                let k = w.a[t][j].div_euclid(p);
                if k != 0 {
                    w.col_sub(j, t, k)?;
                }
                if w.a[t][j] != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility: p must divide every remaining entry
            let mut bad = None;
            'scan: for i in (t + 1)..rows {
                for j in (t + 1)..cols {
                    if w.a[i][j] % p != 0 {
                        bad = Some(i);
                        break 'scan;
                    }
                }
            }
            match bad {
                Some(i) => w.row_sub(t, i, -1)?,
                None => break,
            }
        }
        if w.a[t][t] < 0 {
            w.row_neg(t);
        }
    }
    let diag = (0..n).map(|i| w.a[i][i]).collect();
    Ok(Smith { diag, u: w.u, v: w.v })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul(a: &[Vec<i128>], b: &[Vec<i128>]) -> Vec<Vec<i128>> {
        let c = b[0].len();
        a.iter()
            .map(|r| (0..c).map(|j| r.iter().zip(b).map(|(x, br)| x * br[j]).sum()).collect())
            .collect()
    }

    fn check(a: Vec<Vec<i64>>, expect: &[i128]) {
        let s = smith(&a).unwrap();
        assert_eq!(s.diag, expect);
        let a128: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
        let d = mul(&mul(&s.u, &a128), &s.v);
        for (i, row) in d.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                let want = if i == j { expect[i] } else { 0 };
                assert_eq!(x, want);
            }
        }
    }

    #[test]
    fn small_cases() {
        check(vec![vec![2]], &[2]);
        check(vec![vec![0, 1], vec![1, 0]], &[1, 1]);
        check(vec![vec![0, 2], vec![2, 0]], &[2, 2]);
        check(vec![vec![2, -1], vec![-1, 2]], &[1, 3]);
        check(vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]], &[2, 6, 12]);
        check(vec![vec![0, 0, 3]], &[3]);
    }
}
