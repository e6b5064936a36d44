/// All permutations of `0..n` paired with their sign (+1 even, -1 odd),
/// in lexicographic order.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, i8)> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; n];
    build(n, &mut current, &mut used, &mut out);
    out.into_iter().map(|p| {
        let s = sign(&p);
        (p, s)
    }).collect()
}

fn build(n: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
    if current.len() == n {
        out.push(current.clone());
        return;
    }
    for k in 0..n {
        if !used[k] {
            used[k] = true;
            current.push(k);
            build(n, current, used, out);
            current.pop();
            used[k] = false;
        }
    }
}

/// Sign of a permutation, by counting inversions.
pub fn sign(p: &[usize]) -> i8 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 { 1 } else { -1 }
}
