use nlu_core::textprep::stem;
use proptest::prelude::*;

/// Input/output pairs from the published Snowball English sample vocabulary.
const SNOWBALL_SAMPLE: &[(&str, &str)] = &[
    ("consign", "consign"),
    ("consigned", "consign"),
    ("consigning", "consign"),
    ("consignment", "consign"),
    ("consist", "consist"),
    ("consisted", "consist"),
    ("consistency", "consist"),
    ("consistent", "consist"),
    ("consistently", "consist"),
    ("consisting", "consist"),
    ("consists", "consist"),
    ("consolation", "consol"),
    ("consolations", "consol"),
    ("consolatory", "consolatori"),
    ("console", "consol"),
    ("consoled", "consol"),
    ("consoles", "consol"),
    ("consolidate", "consolid"),
    ("consolidated", "consolid"),
    ("consolidating", "consolid"),
    ("consoling", "consol"),
    ("consolingly", "consol"),
    ("consols", "consol"),
    ("consonant", "conson"),
    ("consort", "consort"),
    ("consorted", "consort"),
    ("consorting", "consort"),
    ("conspicuous", "conspicu"),
    ("conspicuously", "conspicu"),
    ("conspiracy", "conspiraci"),
    ("conspirator", "conspir"),
    ("conspirators", "conspir"),
    ("conspire", "conspir"),
    ("conspired", "conspir"),
    ("conspiring", "conspir"),
    ("constable", "constabl"),
    ("constables", "constabl"),
    ("constance", "constanc"),
    ("constancy", "constanc"),
    ("constant", "constant"),
    ("knack", "knack"),
    ("knackeries", "knackeri"),
    ("knacks", "knack"),
    ("knave", "knave"),
    ("knaves", "knave"),
    ("knavish", "knavish"),
    ("kneaded", "knead"),
    ("kneading", "knead"),
    ("knee", "knee"),
    ("kneel", "kneel"),
    ("kneeled", "kneel"),
    ("kneeling", "kneel"),
    ("kneels", "kneel"),
    ("knees", "knee"),
    ("knell", "knell"),
    ("knelt", "knelt"),
    ("knew", "knew"),
    ("knife", "knife"),
    ("knight", "knight"),
    ("knightly", "knight"),
    ("knights", "knight"),
    ("knit", "knit"),
    ("knits", "knit"),
    ("knitted", "knit"),
    ("knitting", "knit"),
    ("knives", "knive"),
    ("knob", "knob"),
    ("knobs", "knob"),
    ("knock", "knock"),
    ("knocked", "knock"),
    ("knocker", "knocker"),
    ("knockers", "knocker"),
    ("knocking", "knock"),
    ("knocks", "knock"),
    ("knot", "knot"),
    ("knots", "knot"),
];

/// Words the emotion and intent heads see: cue words, banking vocabulary
/// and everyday filler.
const LEXICON: &[&str] = &[
    "delighted",
    "celebrated",
    "laughed",
    "won",
    "cried",
    "lonely",
    "funeral",
    "missed",
    "scared",
    "dark",
    "chased",
    "trembling",
    "furious",
    "yelled",
    "insulted",
    "unfair",
    "guilty",
    "lied",
    "neglected",
    "blame",
    "disgusting",
    "rotten",
    "vomit",
    "filthy",
    "ashamed",
    "embarrassed",
    "humiliated",
    "blushed",
    "card",
    "declined",
    "broken",
    "working",
    "phone",
    "lost",
    "stolen",
    "mobile",
    "rate",
    "exchange",
    "currency",
    "euro",
    "top",
    "failed",
    "address",
    "details",
    "change",
    "transfer",
    "transferred",
    "payment",
    "payments",
    "refund",
    "refunded",
    "pending",
    "charged",
    "withdrawal",
    "verification",
    "identity",
    "activate",
    "activation",
    "thesis",
    "team",
    "yesterday",
    "happiness",
    "running",
    "cats",
    "generously",
    "relational",
    "conditional",
    "hopeful",
    "goodness",
    "adjustment",
    "dependent",
    "adoption",
    "sensitivity",
];

#[test]
fn matches_published_sample_vocabulary() {
    for (word, expected) in SNOWBALL_SAMPLE {
        assert_eq!(stem(word), *expected, "{word}");
    }
}

#[test]
fn idempotent_on_lexicon_outputs() {
    for word in LEXICON.iter().chain(SNOWBALL_SAMPLE.iter().map(|(w, _)| w)) {
        let once = stem(word);
        assert_eq!(stem(&once), once, "{word} -> {once}");
    }
}

proptest! {
    #[test]
    fn never_longer_and_deterministic(word in "[a-z]{1,14}") {
        let s = stem(&word);
        prop_assert!(s.len() <= word.len());
        prop_assert_eq!(stem(&word), s);
    }

    #[test]
    fn short_words_are_untouched(word in "[a-z]{1,2}") {
        prop_assert_eq!(stem(&word), word);
    }
}
