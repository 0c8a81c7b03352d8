//! Porter stemmer.
//!
//! Implements the suffix-stripping algorithm from Porter (1980), including
//! the two revisions carried by the reference implementation and its
//! published test vocabulary: step 2 rewrites `bli -> ble` (instead of
//! `abli -> able`) and gains `logi -> log`.
//!
//! Input is expected to be a lowercase token from the tokenizer. Tokens of
//! length one or two, and tokens containing non-ASCII bytes, are returned
//! unchanged, as the reference implementation does. Digit-bearing tokens
//! pass through the steps and are only altered where a suffix rule
//! actually matches (e.g. a literal trailing `s`).

/// Stem one lowercase token.
pub fn stem(token: &str) -> String {
    if token.len() <= 2 || !token.is_ascii() {
        return token.to_string();
    }
    let mut word = token.as_bytes().to_vec();
    step1a(&mut word);
    step1b(&mut word);
    step1c(&mut word);
    step2(&mut word);
    step3(&mut word);
    step4(&mut word);
    step5a(&mut word);
    step5b(&mut word);
    String::from_utf8(word).expect("ascii input stays ascii")
}

fn is_consonant(word: &[u8], i: usize) -> bool {
    match word[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(word, i - 1),
        _ => true,
    }
}

/// The measure m: the number of vowel-consonant sequences in
/// `[C](VC)^m[V]`.
fn measure(word: &[u8]) -> usize {
    let len = word.len();
    let mut i = 0;
    let mut m = 0;
    while i < len && is_consonant(word, i) {
        i += 1;
    }
    loop {
        while i < len && !is_consonant(word, i) {
            i += 1;
        }
        if i == len {
            return m;
        }
        while i < len && is_consonant(word, i) {
            i += 1;
        }
        m += 1;
        if i == len {
            return m;
        }
    }
}

fn contains_vowel(word: &[u8]) -> bool {
    (0..word.len()).any(|i| !is_consonant(word, i))
}

fn ends_double_consonant(word: &[u8]) -> bool {
    let len = word.len();
    len >= 2 && word[len - 1] == word[len - 2] && is_consonant(word, len - 1)
}

/// `*o`: stem ends consonant-vowel-consonant where the final consonant is
/// not w, x, or y.
fn ends_cvc(word: &[u8]) -> bool {
    let len = word.len();
    if len < 3 {
        return false;
    }
    is_consonant(word, len - 3)
        && !is_consonant(word, len - 2)
        && is_consonant(word, len - 1)
        && !matches!(word[len - 1], b'w' | b'x' | b'y')
}

fn ends_with(word: &[u8], suffix: &[u8]) -> bool {
    word.len() >= suffix.len() && &word[word.len() - suffix.len()..] == suffix
}

fn replace_suffix(word: &mut Vec<u8>, suffix_len: usize, replacement: &[u8]) {
    let keep = word.len() - suffix_len;
    word.truncate(keep);
    word.extend_from_slice(replacement);
}

/// Apply the first (longest) matching rule whose stem satisfies
/// `measure(stem) > min_measure`. Once a suffix matches, the step is
/// decided: a failed measure condition means no change, not a shorter
/// suffix.
fn rule_table(word: &mut Vec<u8>, rules: &[(&[u8], &[u8])], min_measure: usize) {
    for (suffix, replacement) in rules {
        if ends_with(word, suffix) {
            let stem_len = word.len() - suffix.len();
            if measure(&word[..stem_len]) > min_measure {
                replace_suffix(word, suffix.len(), replacement);
            }
            return;
        }
    }
}

fn step1a(word: &mut Vec<u8>) {
    // sses -> ss and ies -> i both drop the last two bytes
    if ends_with(word, b"sses") || ends_with(word, b"ies") {
        word.truncate(word.len() - 2);
    } else if ends_with(word, b"ss") {
        // keep
    } else if ends_with(word, b"s") {
        word.truncate(word.len() - 1);
    }
}

fn step1b(word: &mut Vec<u8>) {
    if ends_with(word, b"eed") {
        if measure(&word[..word.len() - 3]) > 0 {
            word.truncate(word.len() - 1);
        }
        return;
    }
    let stripped = if ends_with(word, b"ed") && contains_vowel(&word[..word.len() - 2]) {
        word.truncate(word.len() - 2);
        true
    } else if ends_with(word, b"ing") && contains_vowel(&word[..word.len() - 3]) {
        word.truncate(word.len() - 3);
        true
    } else {
        false
    };
    if !stripped {
        return;
    }
    if ends_with(word, b"at") || ends_with(word, b"bl") || ends_with(word, b"iz") {
        word.push(b'e');
    } else if ends_double_consonant(word) && !matches!(word[word.len() - 1], b'l' | b's' | b'z') {
        word.truncate(word.len() - 1);
    } else if measure(word) == 1 && ends_cvc(word) {
        word.push(b'e');
    }
}

fn step1c(word: &mut [u8]) {
    if ends_with(word, b"y") && contains_vowel(&word[..word.len() - 1]) {
        let last = word.len() - 1;
        word[last] = b'i';
    }
}

/// Suffix tables are ordered by descending suffix length so that a linear
/// scan realizes the longest-match rule.
const STEP2_RULES: &[(&[u8], &[u8])] = &[
    (b"ational", b"ate"),
    (b"ization", b"ize"),
    (b"iveness", b"ive"),
    (b"fulness", b"ful"),
    (b"ousness", b"ous"),
    (b"tional", b"tion"),
    (b"biliti", b"ble"),
    (b"entli", b"ent"),
    (b"ousli", b"ous"),
    (b"alism", b"al"),
    (b"aliti", b"al"),
    (b"iviti", b"ive"),
    (b"ation", b"ate"),
    (b"enci", b"ence"),
    (b"anci", b"ance"),
    (b"izer", b"ize"),
    (b"alli", b"al"),
    (b"ator", b"ate"),
    (b"logi", b"log"),
    (b"bli", b"ble"),
    (b"eli", b"e"),
];

fn step2(word: &mut Vec<u8>) {
    rule_table(word, STEP2_RULES, 0);
}

const STEP3_RULES: &[(&[u8], &[u8])] = &[
    (b"icate", b"ic"),
    (b"ative", b""),
    (b"alize", b"al"),
    (b"iciti", b"ic"),
    (b"ical", b"ic"),
    (b"ness", b""),
    (b"ful", b""),
];

fn step3(word: &mut Vec<u8>) {
    rule_table(word, STEP3_RULES, 0);
}

const STEP4_SUFFIXES: &[&[u8]] = &[
    b"ement", b"ance", b"ence", b"able", b"ible", b"ment", b"ant", b"ent", b"ion", b"ism", b"ate",
    b"iti", b"ous", b"ive", b"ize", b"al", b"er", b"ic", b"ou",
];

fn step4(word: &mut Vec<u8>) {
    for suffix in STEP4_SUFFIXES {
        if ends_with(word, suffix) {
            let stem_len = word.len() - suffix.len();
            let stem = &word[..stem_len];
            let strip = measure(stem) > 1
                && (*suffix != b"ion" || matches!(stem.last(), Some(b's') | Some(b't')));
            if strip {
                word.truncate(stem_len);
            }
            return;
        }
    }
}

fn step5a(word: &mut Vec<u8>) {
    if ends_with(word, b"e") {
        let stem = &word[..word.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            word.truncate(word.len() - 1);
        }
    }
}

fn step5b(word: &mut Vec<u8>) {
    if ends_with(word, b"ll") && measure(word) > 1 {
        word.truncate(word.len() - 1);
    }
}
