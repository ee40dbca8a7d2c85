use super::{Diagnostic, Pos};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u64),
    Float(f64),
    /// `$name`; the name excludes the sigil.
    Var(String),
    /// `\e`
    Empty,
    Semi,
    Comma,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Lt,
    Gt,
    Pipe,
    Star,
    Plus,
    Minus,
    Underscore,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Float(x) => format!("number `{x}`"),
            Tok::Var(v) => format!("variable `${v}`"),
            Tok::Empty => "`\\e`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Star => "`*`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Underscore => "`_`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub(crate) fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, Vec<Diagnostic>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let single = match c {
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '<' => Some(Tok::Lt),
            '>' => Some(Tok::Gt),
            '|' => Some(Tok::Pipe),
            '*' => Some(Tok::Star),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            _ => None,
        };
        if let Some(tok) = single {
            bump!();
            out.push((tok, pos));
            continue;
        }
        if c == '\\' {
            bump!();
            if chars.get(i) == Some(&'e') && !chars.get(i + 1).is_some_and(|c| is_word(*c)) {
                bump!();
                out.push((Tok::Empty, pos));
            } else {
                errors.push(Diagnostic::error(pos, "expected `\\e` after backslash"));
            }
            continue;
        }
        if c == '$' {
            bump!();
            let start = i;
            while i < chars.len() && is_word(chars[i]) {
                bump!();
            }
            let name: String = chars[start..i].iter().collect();
            if name.trim_start_matches('_').starts_with(|c: char| c.is_ascii_alphabetic()) {
                out.push((Tok::Var(name), pos));
            } else {
                errors.push(Diagnostic::error(pos, "`$` must be followed by a variable name"));
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let mut float = false;
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()) {
                float = true;
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            if matches!(chars.get(i), Some('e' | 'E')) {
                let sign = matches!(chars.get(i + 1), Some('+' | '-'));
                let digit_at = i + 1 + usize::from(sign);
                if chars.get(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                    float = true;
                    bump!();
                    if sign {
                        bump!();
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!();
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            if i < chars.len() && is_word(chars[i]) {
                errors.push(Diagnostic::error(pos, format!("malformed number `{text}{}`", chars[i])));
                while i < chars.len() && is_word(chars[i]) {
                    bump!();
                }
                continue;
            }
            let tok = if float { text.parse().map(Tok::Float).ok() } else { text.parse().map(Tok::Int).ok() };
            match tok {
                Some(t) => out.push((t, pos)),
                None => errors.push(Diagnostic::error(pos, format!("number `{text}` out of range"))),
            }
            continue;
        }
        if c == '_' && !chars.get(i + 1).is_some_and(|c| is_word(*c)) {
            bump!();
            out.push((Tok::Underscore, pos));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && is_word(chars[i]) {
                bump!();
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        errors.push(Diagnostic::error(pos, format!("unexpected character `{c}`")));
        bump!();
    }
    out.push((Tok::Eof, Pos { line, col }));
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}
