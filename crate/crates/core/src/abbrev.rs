//! Rule-based abbreviation detection (`long form (SF)` patterns) and
//! whole-mention expansion.

use std::collections::BTreeMap;

/// Short form to long form pairs found in a single document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbbreviationMap {
    pairs: BTreeMap<String, String>,
}

impl AbbreviationMap {
    pub fn get(&self, short_form: &str) -> Option<&str> {
        self.pairs.get(short_form).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn insert(&mut self, short_form: String, long_form: String) {
        if short_form.is_empty() || short_form == long_form {
            return;
        }
        self.pairs.entry(short_form).or_insert(long_form);
    }
}

/// Finds `long form (SF)` definitions in `text`.
pub fn detect_abbreviations(text: &str) -> AbbreviationMap {
    let mut map = AbbreviationMap::default();
    let chars: Vec<char> = text.chars().collect();

    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '(' {
            i += 1;
            continue;
        }
        let Some(close) = (i + 1..chars.len()).find(|&j| chars[j] == ')' || chars[j] == '(') else {
            break;
        };
        if chars[close] == '(' {
            i = close;
            continue;
        }
        let inside: String = chars[i + 1..close].iter().collect();
        let short_form = inside
            .split([';', ','])
            .next()
            .unwrap_or("")
            .trim()
            .to_string();

        if is_valid_short_form(&short_form) {
            let window = preceding_clause(&chars[..i]);
            let sf_len = short_form.chars().count();
            let max_words = (sf_len + 5).min(2 * sf_len);
            let words: Vec<&str> = window.split_whitespace().collect();
            let candidate = words[words.len().saturating_sub(max_words)..].join(" ");
            if let Some(long_form) = best_long_form(&short_form, &candidate) {
                map.insert(short_form, long_form);
            }
        }
        i = close + 1;
    }
    map
}

/// Text between the previous clause boundary and `(`.
fn preceding_clause(before: &[char]) -> String {
    let mut start = 0;
    for k in (0..before.len()).rev() {
        let c = before[k];
        let sentence_end = matches!(c, '.' | '!' | '?' | ';')
            && before.get(k + 1).is_none_or(|n| n.is_whitespace());
        if sentence_end || c == ')' || c == '(' {
            start = k + 1;
            break;
        }
    }
    before[start..].iter().collect()
}

fn is_valid_short_form(sf: &str) -> bool {
    let n = sf.chars().count();
    if !(2..=10).contains(&n) || sf.split_whitespace().count() > 2 {
        return false;
    }
    let first_ok = sf.chars().next().is_some_and(char::is_alphanumeric);
    first_ok && sf.chars().any(char::is_alphabetic)
}

/// Right-to-left character alignment of the short form inside the candidate;
/// the first short-form character has to start a word.
fn best_long_form(short_form: &str, candidate: &str) -> Option<String> {
    let sf: Vec<char> = short_form.chars().flat_map(char::to_lowercase).collect();
    let lf: Vec<char> = candidate.chars().collect();
    let lf_lower: Vec<char> = lf
        .iter()
        .map(|c| c.to_lowercase().next().unwrap_or(*c))
        .collect();

    let mut s = sf.len() as isize - 1;
    let mut l = lf.len() as isize - 1;
    while s >= 0 {
        let cur = sf[s as usize];
        if !cur.is_alphanumeric() {
            s -= 1;
            continue;
        }
        while l >= 0
            && (lf_lower[l as usize] != cur
                || (s == 0 && l > 0 && lf[l as usize - 1].is_alphanumeric()))
        {
            l -= 1;
        }
        if l < 0 {
            return None;
        }
        l -= 1;
        s -= 1;
    }
    let start = lf[..(l + 1) as usize]
        .iter()
        .rposition(|c| c.is_whitespace())
        .map_or(0, |p| p + 1);
    let long_form: String = lf[start..].iter().collect::<String>().trim().to_string();

    let lf_len = long_form.chars().count();
    if lf_len <= short_form.chars().count() {
        return None;
    }
    if long_form
        .split_whitespace()
        .any(|w| w.eq_ignore_ascii_case(short_form))
    {
        return None;
    }
    Some(long_form)
}

/// Replaces a mention that is exactly a detected short form by its long form.
pub fn expand_mention(mention_text: &str, map: &AbbreviationMap) -> String {
    if let Some(long) = map.get(mention_text) {
        return long.to_string();
    }
    let lowered = mention_text.to_lowercase();
    map.iter()
        .find(|(sf, _)| sf.to_lowercase() == lowered)
        .map(|(_, long)| long.to_string())
        .unwrap_or_else(|| mention_text.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const IRIS: &str = "immune reconstitution inflammatory syndrome";

    #[test]
    fn iris_is_detected() {
        let map = detect_abbreviations(
            "Patients developed immune reconstitution inflammatory syndrome (IRIS) after therapy.",
        );
        assert_eq!(map.get("IRIS"), Some(IRIS));
        assert_eq!(map.len(), 1);
    }

    #[test]
    fn misaligned_parenthetical_is_skipped() {
        assert!(detect_abbreviations("hello (world)").is_empty());
        assert!(detect_abbreviations("no parentheses at all").is_empty());
    }

    #[test]
    fn first_character_must_start_a_word() {
        // 'c' of CP occurs inside "acute" but no word in the window starts with c
        assert!(detect_abbreviations("acute pain (CP)").is_empty());
    }

    #[test]
    fn window_is_bounded_by_clause_and_word_count() {
        let map = detect_abbreviations("Results were clear. The tumor necrosis factor (TNF) rose.");
        assert_eq!(map.get("TNF"), Some("tumor necrosis factor"));
        let map = detect_abbreviations("Alpha beta. (AB)");
        assert!(map.is_empty());
    }

    #[test]
    fn expansion_rules() {
        let map = detect_abbreviations(&format!("{IRIS} (IRIS)"));
        assert_eq!(expand_mention("IRIS", &map), IRIS);
        assert_eq!(expand_mention("iris", &map), IRIS);
        assert_eq!(expand_mention("vasculitis", &AbbreviationMap::default()), "vasculitis");
        assert_eq!(expand_mention("AL", &map), "AL");
        assert_eq!(expand_mention("IRIS patients", &map), "IRIS patients");
    }

    #[test]
    fn secondary_content_after_semicolon() {
        let map = detect_abbreviations("chronic kidney disease (CKD; stage 3)");
        assert_eq!(map.get("CKD"), Some("chronic kidney disease"));
    }
}
