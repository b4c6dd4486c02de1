#![allow(dead_code)]

use fsnc_core::graphdata::{generate_sbm, split_label_space, GraphBundle, LabelSplit, SbmSpec, SplitAssignment};

pub fn sbm_spec(classes: usize, nodes_per_class: usize) -> SbmSpec {
    SbmSpec {
        classes,
        nodes_per_class,
        p_in: 0.2,
        p_out: 0.01,
        feature_dim: 16,
        class_mean_separation: 3.0,
        noise_std: 1.0,
    }
}

/// Six classes split 2/2/2.
pub fn six_class(spec: &SbmSpec, seed: u64) -> (GraphBundle, LabelSplit) {
    let g = generate_sbm(spec, seed).unwrap();
    let split = split_label_space(&g, &SplitAssignment::contiguous(2, 2, 2)).unwrap();
    (g, split)
}

pub fn easy_sbm(seed: u64) -> (GraphBundle, LabelSplit) {
    six_class(&sbm_spec(6, 50), seed)
}
