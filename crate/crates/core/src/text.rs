//! Arabic-aware text normalization and tokenization shared by retrieval,
//! extraction, and name resolution.

/// Combining marks stripped during normalization: tanwin, short vowels,
/// shadda, sukun, dagger alef, hamza marks, and the tatweel stretch mark.
fn is_stripped_mark(c: char) -> bool {
    matches!(c,
        '\u{064B}'..='\u{065F}' // tanwin, harakat, shadda, sukun, hamza marks
        | '\u{0670}'            // dagger alef
        | '\u{0640}'            // tatweel
    )
}

/// Normalizes text for matching: strips Arabic diacritics and tatweel,
/// unifies alef/ya/ta-marbuta/hamza-carrier variants, converts Arabic-Indic
/// digits to ASCII, lowercases Latin letters, and collapses whitespace runs
/// to single spaces.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_space = true;
    for c in text.chars() {
        let mapped = match c {
            _ if is_stripped_mark(c) => continue,
            '\u{0622}' | '\u{0623}' | '\u{0625}' | '\u{0671}' => '\u{0627}', // alef variants -> alef
            '\u{0624}' => '\u{0648}', // hamza on waw -> waw
            '\u{0626}' => '\u{064A}', // hamza on ya -> ya
            '\u{0649}' => '\u{064A}', // alef maqsura -> ya
            '\u{0629}' => '\u{0647}', // ta marbuta -> ha
            '\u{0660}'..='\u{0669}' => {
                char::from(b'0' + (c as u32 - 0x0660) as u8) // Arabic-Indic digits
            }
            '\u{06F0}'..='\u{06F9}' => {
                char::from(b'0' + (c as u32 - 0x06F0) as u8) // extended digits
            }
            _ => c,
        };
        if mapped.is_whitespace() {
            if !last_space {
                out.push(' ');
                last_space = true;
            }
            continue;
        }
        last_space = false;
        for lower in mapped.to_lowercase() {
            out.push(lower);
        }
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Splits normalized text into alphanumeric tokens; punctuation and symbols
/// act as separators. Input is normalized first, so callers may pass raw text.
pub fn tokenize(text: &str) -> Vec<String> {
    normalize(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
