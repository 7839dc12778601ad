use super::Basis;

/// Number of terms of the basis in `k` dimensions (constant included).
pub fn basis_size(k: usize, basis: Basis) -> usize {
    match basis {
        Basis::Linear => 1 + k,
        Basis::Quadratic => 1 + 2 * k + k * (k.saturating_sub(1)) / 2,
    }
}

/// Polynomial terms `1, z_i, z_i², z_i z_j (i<j)`.
pub fn basis_row(z: &[f64], basis: Basis) -> Vec<f64> {
    let k = z.len();
    let mut row = Vec::with_capacity(basis_size(k, basis));
    row.push(1.0);
    row.extend_from_slice(z);
    if basis == Basis::Quadratic {
        row.extend(z.iter().map(|v| v * v));
        for i in 0..k {
            for j in i + 1..k {
                row.push(z[i] * z[j]);
            }
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_rows() {
        for k in 1..6 {
            for basis in [Basis::Linear, Basis::Quadratic] {
                assert_eq!(basis_row(&vec![0.5; k], basis).len(), basis_size(k, basis));
            }
        }
        assert_eq!(basis_size(20, Basis::Quadratic), 231);
        assert_eq!(basis_row(&[2.0, 3.0], Basis::Quadratic), vec![1.0, 2.0, 3.0, 4.0, 9.0, 6.0]);
    }
}
