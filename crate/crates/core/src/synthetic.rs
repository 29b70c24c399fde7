//! Seeded toy corpora with the same shapes as the real datasets. Each class
//! has its own cue words, so the fixtures are learnable by every
//! architecture; they exist for overfitting checks, determinism tests,
//! service tests and benchmarks, not for measuring accuracy.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpora::{ClassificationCorpus, DatasetId, TaggedCorpus, EMOTIONS};

const FILLER: &[&str] = &[
    "the", "a", "i", "it", "was", "really", "today", "this", "that", "my", "just", "so", "very",
    "about", "with",
];

const POSITIVE: &[&str] = &[
    "good",
    "great",
    "love",
    "wonderful",
    "excellent",
    "happy",
    "nice",
    "best",
];
const NEGATIVE: &[&str] = &[
    "bad", "awful", "hate", "terrible", "boring", "worst", "sad", "poor",
];

const EMOTION_CUES: [&[&str]; 7] = [
    &["delighted", "celebrated", "laughed", "won"],
    &["cried", "lonely", "funeral", "missed"],
    &["scared", "dark", "chased", "trembling"],
    &["furious", "yelled", "insulted", "unfair"],
    &["guilty", "lied", "neglected", "blame"],
    &["disgusting", "rotten", "vomit", "filthy"],
    &["ashamed", "embarrassed", "humiliated", "blushed"],
];

pub const INTENTS: &[(&str, &[&str])] = &[
    (
        "card_not_working",
        &["card", "declined", "broken", "working"],
    ),
    (
        "lost_or_stolen_phone",
        &["phone", "lost", "stolen", "mobile"],
    ),
    ("exchange_rate", &["rate", "exchange", "currency", "euro"]),
    ("top_up_failed", &["top", "up", "failed", "topup"]),
    (
        "edit_personal_details",
        &["address", "name", "details", "change"],
    ),
];

const PEOPLE: &[&str] = &["George", "Maria", "Ahmed", "Chen", "Olga"];
const PLACES: &[&str] = &["London", "Indonesia", "Paris", "Dhaka", "Nairobi"];
const ORGS: &[&str] = &["Reuters", "Google", "UNICEF"];
const DAYS: &[&str] = &["Sunday", "Monday", "Friday", "yesterday"];
const VERBS: &[&str] = &[
    "will", "go", "went", "to", "from", "met", "visited", "in", "said",
];

fn sentence(rng: &mut ChaCha8Rng, cues: &[&str], min_len: usize, max_len: usize) -> String {
    let len = rng.random_range(min_len..=max_len);
    let cue_at = rng.random_range(0..len);
    (0..len)
        .map(|i| {
            if i == cue_at {
                *cues.choose(rng).expect("non-empty cue list")
            } else {
                *FILLER.choose(rng).expect("non-empty filler")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Balanced binary corpus, labels alternate negative/positive.
pub fn sentiment_corpus(n: usize, seed: u64) -> ClassificationCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut texts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let cues = if label == 1 { POSITIVE } else { NEGATIVE };
        texts.push(sentence(&mut rng, cues, 4, 10));
        labels.push(label);
    }
    ClassificationCorpus::new(
        texts,
        labels,
        vec!["negative".into(), "positive".into()],
        DatasetId::Custom,
    )
    .expect("generated corpus is well formed")
}

/// Seven-way corpus in the ISEAR label order, classes round-robin.
pub fn emotion_corpus(n: usize, seed: u64) -> ClassificationCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut texts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % EMOTIONS.len();
        texts.push(sentence(&mut rng, EMOTION_CUES[label], 4, 12));
        labels.push(label);
    }
    ClassificationCorpus::new(
        texts,
        labels,
        EMOTIONS.iter().map(|s| s.to_string()).collect(),
        DatasetId::Custom,
    )
    .expect("generated corpus is well formed")
}

/// Banking-style intents from [`INTENTS`], classes round-robin.
pub fn intent_corpus(n: usize, seed: u64) -> ClassificationCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut texts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % INTENTS.len();
        texts.push(sentence(&mut rng, INTENTS[label].1, 3, 9));
        labels.push(label);
    }
    ClassificationCorpus::new(
        texts,
        labels,
        INTENTS.iter().map(|(name, _)| name.to_string()).collect(),
        DatasetId::Custom,
    )
    .expect("generated corpus is well formed")
}

/// GMB-shaped tagged sentences built from person, place, organization and
/// time slots.
pub fn ner_corpus(n: usize, seed: u64) -> TaggedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::with_capacity(n);
    let mut tags = Vec::with_capacity(n);
    for _ in 0..n {
        let mut toks: Vec<String> = Vec::new();
        let mut tg: Vec<String> = Vec::new();
        let mut push = |t: &str, g: &str| {
            toks.push(t.to_owned());
            tg.push(g.to_owned());
        };
        push(PEOPLE.choose(&mut rng).expect("non-empty"), "B-per");
        for _ in 0..rng.random_range(1..3) {
            push(VERBS.choose(&mut rng).expect("non-empty"), "O");
        }
        push(PLACES.choose(&mut rng).expect("non-empty"), "B-geo");
        if rng.random_bool(0.5) {
            push("with", "O");
            push(ORGS.choose(&mut rng).expect("non-empty"), "B-org");
        }
        push(DAYS.choose(&mut rng).expect("non-empty"), "B-tim");
        if rng.random_bool(0.5) {
            push("morning", "I-tim");
        }
        sentences.push(toks);
        tags.push(tg);
    }
    TaggedCorpus::new(sentences, tags).expect("generated corpus is well formed")
}

/// Fixed utterances for prediction and service checks, including the
/// worked examples used throughout the docs.
pub fn probe_utterances() -> Vec<String> {
    let fixed = [
        "Hey, you are a good bot",
        "I did not help my thesis team enough.",
        "My card is not working at the shop",
        "I lost my phone yesterday, so I could not help out enough to my thesis team",
        "George will go to London from Indonesia Sunday morning.",
        "What is the exchange rate for euro?",
        "I am furious, that was so unfair",
        "The funeral made me cry all day",
        "qwxz blorf snarg",
        "!!!",
    ];
    let mut out: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pools: [&[&str]; 6] = [POSITIVE, NEGATIVE, PEOPLE, PLACES, DAYS, FILLER];
    while out.len() < 50 {
        let len = rng.random_range(2..12);
        let words: Vec<&str> = (0..len)
            .map(|_| {
                *pools
                    .choose(&mut rng)
                    .expect("non-empty")
                    .choose(&mut rng)
                    .expect("non-empty")
            })
            .collect();
        out.push(words.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic_and_balanced() {
        assert_eq!(sentiment_corpus(32, 1), sentiment_corpus(32, 1));
        assert_ne!(sentiment_corpus(32, 1).texts, sentiment_corpus(32, 2).texts);
        let e = emotion_corpus(35, 3);
        for c in 0..7 {
            assert_eq!(e.labels.iter().filter(|&&l| l == c).count(), 5);
        }
        let n = ner_corpus(10, 4);
        assert!(n.tag_names.contains(&"B-geo".to_owned()));
        assert_eq!(probe_utterances().len(), 50);
    }
}
