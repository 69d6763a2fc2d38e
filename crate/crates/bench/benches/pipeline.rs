use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use xlchat_core::detector::assemble_input;
use xlchat_core::detector::WordPiece;
use xlchat_core::evaluation::{confusion_from_labels, prf, sentence_bleu, BleuConfig};
use xlchat_core::testkit::{planted_corpus_with, random_quad, EN_PLAN};
use xlchat_core::{build_quads, CtxPolicy, Label};

fn bleu(c: &mut Criterion) {
    let hyp = "I had America as my dinner tonight , and it was really good .";
    let reference = "I had rice as my dinner tonight , and it was really good .";
    let plain = BleuConfig::plain();
    let default = BleuConfig::default();
    c.bench_function("sentence_bleu/plain", |b| {
        b.iter(|| sentence_bleu(black_box(hyp), black_box(reference), &plain))
    });
    c.bench_function("sentence_bleu/default", |b| {
        b.iter(|| sentence_bleu(black_box(hyp), black_box(reference), &default))
    });
}

fn quads(c: &mut Criterion) {
    let corpus = planted_corpus_with(&[EN_PLAN], 1);
    let policy = CtxPolicy::default();
    c.bench_function("build_quads/en_plan", |b| {
        b.iter(|| build_quads(&corpus.chats, &corpus.candidates, &policy).unwrap())
    });
}

fn input(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let quads: Vec<_> = (0..256).map(|_| random_quad(&mut rng, 40)).collect();
    let texts = quads
        .iter()
        .flat_map(|q| [q.ctx_src.as_str(), q.ctx_tgt.as_str(), q.resp_src.as_str(), q.resp_tgt.as_str()]);
    let vocab = WordPiece::build(texts, 4000, true).unwrap();
    c.bench_function("assemble_input/256_quads", |b| {
        b.iter(|| {
            for q in &quads {
                black_box(assemble_input(q, &vocab, 128).unwrap());
            }
        })
    });
}

fn metrics(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut labels = |n: usize| -> Vec<Label> {
        (0..n)
            .map(|_| if rng.random_bool(0.4) { Label::Erroneous } else { Label::Correct })
            .collect()
    };
    let predicted = labels(8000);
    let truth = labels(8000);
    c.bench_function("confusion/8000", |b| {
        b.iter_batched(
            || (predicted.clone(), truth.clone()),
            |(p, t)| prf(&confusion_from_labels(&p, &t).unwrap()),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bleu, quads, input, metrics);
criterion_main!(benches);
