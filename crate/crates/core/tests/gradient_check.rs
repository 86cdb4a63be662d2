use std::time::Instant;

use radtag_core::neuralnet::{grad_check, toy_config, toy_model, toy_sample, Topology};

#[test]
fn all_topologies_match_central_differences() {
    let start = Instant::now();
    for t in Topology::ALL {
        let model = toy_model(t, 7).unwrap();
        let sample = toy_sample(&toy_config(t), 12, 8);
        let r = grad_check(&model, &sample, 1e-5, None).unwrap();
        assert_eq!(r.checked, model.params.count());
        assert!(r.max_rel_error < 1e-4, "{t}: {} at {}", r.max_rel_error, r.worst);
    }
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn dropout_masks_are_replayed() {
    let t = Topology::Cnn;
    let model = toy_model(t, 3).unwrap();
    let sample = toy_sample(&toy_config(t), 10, 4);
    let r = grad_check(&model, &sample, 1e-5, Some(99)).unwrap();
    assert!(r.max_rel_error < 1e-4, "{} at {}", r.max_rel_error, r.worst);
}

#[test]
fn short_sentences_are_padded() {
    for t in Topology::ALL {
        let model = toy_model(t, 1).unwrap();
        let sample = toy_sample(&toy_config(t), 3, 2);
        assert!(grad_check(&model, &sample, 1e-5, None).unwrap().max_rel_error < 1e-4, "{t}");
    }
}
