//! Restricted Damerau-Levenshtein (optimal string alignment) distance.

/// Edit distance over lowercased characters with unit-cost insertion,
/// deletion, substitution and transposition of adjacent characters. No
/// substring is edited more than once.
pub fn damerau_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    osa(&a, &b)
}

fn osa(a: &[char], b: &[char]) -> usize {
    let (n, m) = (a.len(), b.len());
    if n == 0 {
        return m;
    }
    if m == 0 {
        return n;
    }
    // three rolling rows: i-2, i-1, i
    let mut prev2 = vec![0usize; m + 1];
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0usize; m + 1];
    for i in 1..=n {
        cur[0] = i;
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut d = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                d = d.min(prev2[j - 2] + 1);
            }
            cur[j] = d;
        }
        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Distance divided by the longer string's character count; 0 when both
/// strings are empty.
pub fn normalized_dl(a: &str, b: &str) -> f64 {
    let la = a.to_lowercase().chars().count();
    let lb = b.to_lowercase().chars().count();
    let denom = la.max(lb);
    if denom == 0 {
        return 0.0;
    }
    damerau_levenshtein(a, b) as f64 / denom as f64
}
