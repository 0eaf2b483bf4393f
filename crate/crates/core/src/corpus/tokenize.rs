//! Dictionary-free tokenization.
//!
//! Space-delimited scripts: NFKC, lowercase, split on whitespace, then trim
//! punctuation (Unicode `P*`) from both ends of each token and drop tokens
//! left empty. Word-internal punctuation ("don't", "3.14") is kept.
//!
//! Han/Kana scripts (`zh`, `ja`): NFKC, then every Han, Hiragana, Katakana or
//! Hangul character is its own token; runs of any other non-space,
//! non-punctuation characters (Latin words, digits) form one lowercased token.

use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;
use unicode_script::{Script, UnicodeScript};

use super::Language;

pub fn tokenize(text: &str, language: &Language) -> Vec<String> {
    let normalized: String = text.nfkc().collect();
    if language.is_cjk() {
        tokenize_cjk(&normalized)
    } else {
        tokenize_spaced(&normalized)
    }
}

fn tokenize_spaced(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|word| {
            let trimmed = word.trim_matches(is_punctuation);
            (!trimmed.is_empty()).then(|| trimmed.to_lowercase())
        })
        .collect()
}

fn tokenize_cjk(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut run = String::new();
    for c in text.chars() {
        if c.is_whitespace() || is_punctuation(c) {
            flush(&mut run, &mut tokens);
        } else if is_per_character(c) {
            flush(&mut run, &mut tokens);
            tokens.push(c.to_string());
        } else {
            run.extend(c.to_lowercase());
        }
    }
    flush(&mut run, &mut tokens);
    tokens
}

fn flush(run: &mut String, tokens: &mut Vec<String>) {
    if !run.is_empty() {
        tokens.push(std::mem::take(run));
    }
}

fn is_per_character(c: char) -> bool {
    // U+30FC (prolonged sound mark) is script Common but only occurs in kana text.
    matches!(
        c.script(),
        Script::Han | Script::Hiragana | Script::Katakana | Script::Hangul
    ) || c == '\u{30FC}'
}

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang(code: &str) -> Language {
        Language::new(code)
    }

    #[test]
    fn space_script_rule() {
        assert_eq!(
            tokenize("The cat, the hat.", &lang("ar")),
            vec!["the", "cat", "the", "hat"]
        );
    }

    #[test]
    fn cjk_per_character() {
        assert_eq!(tokenize("你好吗", &lang("zh")), vec!["你", "好", "吗"]);
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("", &lang("ja")).is_empty());
        assert!(tokenize("", &lang("en")).is_empty());
        assert!(tokenize("  ...  ", &lang("en")).is_empty());
    }

    #[test]
    fn cjk_keeps_latin_runs_and_drops_punctuation() {
        assert_eq!(
            tokenize("GPT4は、すごい。", &lang("ja")),
            vec!["gpt4", "は", "す", "ご", "い"]
        );
        assert_eq!(
            tokenize("版本 2024 发布!", &lang("zh")),
            vec!["版", "本", "2024", "发", "布"]
        );
    }

    #[test]
    fn nfkc_folds_fullwidth_forms() {
        // Fullwidth Latin becomes ASCII; halfwidth katakana becomes fullwidth.
        assert_eq!(tokenize("ＡＢＣ ｶ", &lang("ja")), vec!["abc", "カ"]);
        assert_eq!(tokenize("ＡＢＣ", &lang("en")), vec!["abc"]);
    }

    #[test]
    fn internal_punctuation_survives() {
        assert_eq!(
            tokenize("Don't stop: 3.14!", &lang("en")),
            vec!["don't", "stop", "3.14"]
        );
    }

    #[test]
    fn arabic_diacritics_stay_attached() {
        let toks = tokenize("كَتَبَ، الوَلَدُ", &lang("ar"));
        assert_eq!(toks.len(), 2);
        assert_eq!(toks[0].chars().count(), 6);
    }
}
