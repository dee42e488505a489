//! Small dense real solvers.

/// Pivot magnitudes below this fraction of the largest coefficient count as
/// singular.
pub(crate) const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Singular {
    pub column: usize,
    pub pivot: f64,
    pub scale: f64,
}

/// Solves `a·x = b` by Gaussian elimination with partial pivoting.
pub(crate) fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>, Singular> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Singular {
            column: 0,
            pivot: 0.0,
            scale,
        });
    }
    for col in 0..n {
        let (p, pivot) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty range");
        if pivot <= SINGULAR_TOL * scale {
            return Err(Singular {
                column: col,
                pivot,
                scale,
            });
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Least-squares solution of an overdetermined system via the normal
/// equations. Returns the solution and the max absolute row residual.
pub(crate) fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64), Singular> {
    let n = rows[0].len();
    let mut ata = vec![vec![0.0; n]; n];
    let mut atb = vec![0.0; n];
    for (row, &y) in rows.iter().zip(rhs) {
        for i in 0..n {
            atb[i] += row[i] * y;
            for j in 0..n {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let x = solve(ata, atb)?;
    let residual = rows
        .iter()
        .zip(rhs)
        .map(|(row, &y)| (row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - y).abs())
        .fold(0.0, f64::max);
    Ok((x, residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_with_pivoting() {
        // zero leading entry forces a row swap
        let a = vec![vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]];
        let x = solve(a, vec![7.0, 3.0, 6.0]).unwrap();
        let expected = [1.0, 2.0, 3.0];
        for (xi, ei) in x.iter().zip(expected) {
            assert!((xi - ei).abs() < 1e-14);
        }
    }

    #[test]
    fn detects_singularity() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(a, vec![1.0, 2.0]).is_err());
        assert!(solve(vec![vec![0.0; 2]; 2], vec![0.0; 2]).is_err());
    }

    #[test]
    fn least_squares_consistent_system() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let (x, res) = least_squares(&rows, &[1.0, 2.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        assert!(res < 1e-14);
    }
}
