//! Direct-loop fusion written without the engine's helpers. Selected rows
//! are added in ordinal order, each column on its own, starting from zero.

/// `rows` are `(ordinal, scores)` in any order. Returns `(sums, decided)`.
pub fn fuse(rows: &[(u8, Vec<f64>)], family: char, k: usize) -> (Vec<f64>, usize) {
    let mut sorted: Vec<(u8, Vec<f64>)> = rows.to_vec();
    let n = sorted.len();
    for i in 0..n {
        for j in 0..n - 1 - i {
            if sorted[j].0 > sorted[j + 1].0 {
                sorted.swap(j, j + 1);
            }
        }
    }
    let c = sorted[0].1.len();
    let used = if k < n { k } else { n };
    let mut sums = vec![0.0f64; c];

    if family == 'S' {
        for r in 0..used {
            for col in 0..c {
                sums[col] += sorted[r].1[col];
            }
        }
    } else if family == 'H' {
        for r in 0..used {
            let hot = first_max(&sorted[r].1);
            sums[hot] += 1.0;
        }
    } else {
        let mut totals = vec![0.0f64; c];
        for r in 0..n {
            for col in 0..c {
                totals[col] += sorted[r].1[col];
            }
        }
        let means: Vec<f64> = totals.iter().map(|t| t / n as f64).collect();
        let d = first_max(&means);
        // Selection: repeatedly take the unpicked row with the largest
        // dominant score, the smaller ordinal on ties.
        let mut picked = vec![false; n];
        for _ in 0..used {
            let mut best: Option<usize> = None;
            for r in 0..n {
                if picked[r] {
                    continue;
                }
                match best {
                    None => best = Some(r),
                    Some(b) => {
                        if sorted[r].1[d] > sorted[b].1[d] {
                            best = Some(r);
                        }
                    }
                }
            }
            picked[best.unwrap()] = true;
        }
        for r in 0..n {
            if picked[r] {
                for col in 0..c {
                    sums[col] += sorted[r].1[col];
                }
            }
        }
    }
    let decided = first_max(&sums);
    (sums, decided)
}

pub fn first_max(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}
