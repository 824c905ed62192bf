//! Synthetic inputs shared by the benchmarks.

use citeverify_core::stats::ClaimCounts;

/// An unnumbered reference list of `n` APA-style entries.
pub fn reference_list(n: usize) -> String {
    let mut out = String::from("Some discussion first.\n\nReferences\n");
    for i in 0..n {
        out.push_str(&format!(
            "Smith, J., & Doe, A. ({}). Learning sparse representations for task {i}. Journal of Machine Learning Research, 12(3), 45-67. https://doi.org/10.1234/jmlr.{i}\n",
            2000 + (i % 25)
        ));
    }
    out
}

/// `n` clusters of five citations with a deterministic label mix.
pub fn clusters(n: usize) -> Vec<ClaimCounts> {
    (0..n)
        .map(|i| {
            let e = i % 6;
            let f = (i / 6) % (6 - e);
            ClaimCounts::from_labels(format!("c{i:04}"), e, 5 - e - f, f)
        })
        .collect()
}
