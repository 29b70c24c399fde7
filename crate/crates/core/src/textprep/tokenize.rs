use super::PreprocessConfig;

/// Characters replaced by whitespace when punctuation stripping is on.
pub const PUNCTUATION: &str = "!\"#$%&()*+,-./:;<=>?@[\\]^_`{|}~";

pub fn is_filtered(c: char) -> bool {
    PUNCTUATION.contains(c)
}

/// Lowercase, replace filtered punctuation with spaces and split on
/// whitespace runs. Newlines and tabs always separate tokens.
pub fn tokenize(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let lowered;
    let text = if config.lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };
    let cleaned: String = if config.strip_punctuation {
        text.chars()
            .map(|c| if is_filtered(c) { ' ' } else { c })
            .collect()
    } else {
        text.to_owned()
    };
    cleaned.split_whitespace().map(str::to_owned).collect()
}
