use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// A backtick-quoted name; never a keyword.
    Quoted(String),
    Str(String),
    Int(i128),
    Float(f64),
    Sym(&'static str),
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    /// Source text of the token, for error messages.
    pub text: String,
}

const SYMBOLS: [&str; 21] = [
    "==", "!=", "<=", ">=", "->", "(", ")", "[", "]", "{", "}", ",", ";", "=", "<", ">", "+", "-",
    "*", "/", "!",
];

/// Splits source text into tokens. Newlines inside brackets or right after
/// a comma are dropped so long lists can wrap.
pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out: Vec<Token> = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut depth = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col, start) = (line, col, i);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                let after_comma = matches!(
                    out.last(),
                    Some(Token {
                        tok: Tok::Sym(","),
                        ..
                    })
                );
                if depth == 0 && !after_comma {
                    out.push(Token {
                        tok: Tok::Newline,
                        line,
                        column: col,
                        text: "newline".into(),
                    });
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                advance(1, &mut i, &mut col);
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    advance(1, &mut i, &mut col);
                }
                continue;
            }
            _ => {}
        }
        let err = |message: String, text: String| {
            ParseError::syntax(start_line, start_col, message, text)
        };
        let tok = if c == '"' {
            advance(1, &mut i, &mut col);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(err(
                            "unterminated string".into(),
                            chars[start..i].iter().collect(),
                        ))
                    }
                    Some('"') => {
                        advance(1, &mut i, &mut col);
                        break;
                    }
                    Some('\\') => {
                        let e = match chars.get(i + 1) {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            other => {
                                return Err(err(
                                    "unknown escape sequence".into(),
                                    format!(
                                        "\\{}",
                                        other.map(|c| c.to_string()).unwrap_or_default()
                                    ),
                                ))
                            }
                        };
                        s.push(e);
                        advance(2, &mut i, &mut col);
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(1, &mut i, &mut col);
                    }
                }
            }
            Tok::Str(s)
        } else if c == '`' {
            advance(1, &mut i, &mut col);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(err(
                            "unterminated quoted name".into(),
                            chars[start..i].iter().collect(),
                        ))
                    }
                    Some('`') if chars.get(i + 1) == Some(&'`') => {
                        s.push('`');
                        advance(2, &mut i, &mut col);
                    }
                    Some('`') => {
                        advance(1, &mut i, &mut col);
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(1, &mut i, &mut col);
                    }
                }
            }
            if s.is_empty() {
                return Err(err("empty quoted name".into(), "``".into()));
            }
            Tok::Quoted(s)
        } else if c.is_ascii_digit() {
            while chars.get(i).is_some_and(|c| c.is_ascii_digit()) {
                advance(1, &mut i, &mut col);
            }
            let mut is_float = false;
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()) {
                is_float = true;
                advance(1, &mut i, &mut col);
                while chars.get(i).is_some_and(|c| c.is_ascii_digit()) {
                    advance(1, &mut i, &mut col);
                }
            }
            if matches!(chars.get(i), Some('e' | 'E')) {
                let sign = usize::from(matches!(chars.get(i + 1), Some('+' | '-')));
                if chars.get(i + 1 + sign).is_some_and(|c| c.is_ascii_digit()) {
                    is_float = true;
                    advance(1 + sign, &mut i, &mut col);
                    while chars.get(i).is_some_and(|c| c.is_ascii_digit()) {
                        advance(1, &mut i, &mut col);
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            if is_float {
                Tok::Float(
                    text.parse()
                        .map_err(|_| err("malformed number".into(), text.clone()))?,
                )
            } else {
                Tok::Int(
                    text.parse()
                        .map_err(|_| err("integer literal out of range".into(), text.clone()))?,
                )
            }
        } else if c.is_alphabetic() || c == '_' {
            while chars
                .get(i)
                .is_some_and(|c| c.is_alphanumeric() || *c == '_')
            {
                advance(1, &mut i, &mut col);
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let sym = SYMBOLS
                .iter()
                .find(|s| rest.starts_with(**s))
                .ok_or_else(|| err(format!("unexpected character `{c}`"), c.to_string()))?;
            advance(sym.chars().count(), &mut i, &mut col);
            match *sym {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth = depth.saturating_sub(1),
                _ => {}
            }
            Tok::Sym(sym)
        };
        out.push(Token {
            tok,
            line: start_line,
            column: start_col,
            text: chars[start..i].iter().collect(),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
        text: "end of input".into(),
    });
    Ok(out)
}
