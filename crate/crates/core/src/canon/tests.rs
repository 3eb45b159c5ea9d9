use super::*;

const EQUAL_TEST: &str = include_str!("../../tests/fixtures/js/equal_test.js");
const CRITEO: &str = include_str!("../../tests/fixtures/js/criteo.js");
const CRITEO_OBF: &str = include_str!("../../tests/fixtures/js/criteo_obfuscated.js");

fn canon(src: &str) -> String {
    emit(&canonicalize_source(src).expect("canonicalize"))
}

#[test]
fn equal_test_golden() {
    let p = canonicalize_source(EQUAL_TEST).unwrap();
    assert_eq!(
        p.emit(),
        "begin\n$0 = v0 === v1\nif($0)\n  return true\nreturn false\nend\n"
    );
    assert_eq!(p.temp_count, 1);
    let kinds: Vec<StmtKind> = p.statements.iter().map(|s| s.kind).collect();
    assert_eq!(
        kinds,
        [
            StmtKind::Begin,
            StmtKind::Assign,
            StmtKind::GuardIf,
            StmtKind::Return,
            StmtKind::Return,
            StmtKind::End
        ]
    );
}

#[test]
fn var_without_init() {
    assert_eq!(canon("var a;"), "begin\nv0 = undefined\nend\n");
}

#[test]
fn empty_program_is_empty() {
    assert_eq!(canon(""), "");
    assert_eq!(canon("// nothing\n"), "");
}

#[test]
fn criteo_and_twin_agree() {
    let a = canon(CRITEO);
    assert_eq!(a, canon(CRITEO_OBF));
    // The loop guard is recomputed at the end of the body.
    assert!(a.contains("while($"), "{a}");
    assert!(a.contains("document.cookie"));
    assert!(a.contains(".indexOf(\"=\")"));
    assert!(a.contains("unescape("));
}

#[test]
fn criteo_loop_shape() {
    let text = canon(CRITEO);
    let lines: Vec<&str> = text.lines().collect();
    let w = lines.iter().position(|l| l.starts_with("while(")).unwrap();
    let guard = lines[w].trim_start_matches("while(").trim_end_matches(')');
    // guard computed right before the loop, recomputed as the last body line
    assert!(lines[w - 1].starts_with(&format!("{guard} = ")));
    let last_body = lines[w + 1..]
        .iter()
        .take_while(|l| l.starts_with("  "))
        .last()
        .unwrap();
    assert!(last_body.trim().starts_with(&format!("{guard} = ")), "{text}");
}

#[test]
fn member_chain_splits() {
    let text = canon("var x = a.b.c(d[1]);");
    assert_eq!(text, "begin\n$0 = a.b\n$1 = d[1]\nv0 = $0.c($1)\nend\n");
}

#[test]
fn short_circuit_and_conditional() {
    assert_eq!(
        canon("var x = a && b;"),
        "begin\nv0 = a\nif(v0)\n  v0 = b\nend\n"
    );
    assert_eq!(
        canon("var x = a || [];"),
        "begin\nv0 = a\n$0 = !v0\nif($0)\n  v0 = []\nend\n"
    );
    assert_eq!(
        canon("var x = c ? 1 : 2;"),
        "begin\nif(c)\n  v0 = 1\n$0 = !c\nif($0)\n  v0 = 2\nend\n"
    );
}

#[test]
fn postfix_update_matches_listing() {
    assert_eq!(canon("var i = 0; i++;"), "begin\nv0 = 0\n$0 = v0\nv0 = v0 + 1\nend\n");
}

#[test]
fn nested_function_is_inline() {
    let text = canon("(function(){ var a = 1; f(a); })();");
    assert_eq!(text, "begin\nbegin\nv0 = 1\nf(v0)\nend\nfunction()\nend\n");
}

#[test]
fn renaming_is_per_function() {
    let text = canon("function f(a){ var b = a; return b; } function g(x, y){ return y; }");
    assert_eq!(
        text,
        "begin\nv1 = v0\nreturn v1\nend\nbegin\nreturn v1\nend\n"
    );
}

#[test]
fn unsupported_becomes_skip() {
    let text = canon("var a = 1; class A {} f(a);");
    assert_eq!(text, "begin\nv0 = 1\nskip\nf(v0)\nend\n");
}

#[test]
fn switch_and_for_in() {
    let text = canon("switch(x){case 1: f(); break; default: g();}");
    assert_eq!(
        text,
        "begin\n$0 = x === 1\nif($0)\n  f()\n  break\nif(true)\n  g()\nend\n"
    );
    let text = canon("for (var k in o) { f(k); }");
    assert_eq!(
        text,
        "begin\n$0 = v0 in o\nwhile($0)\n  f(v0)\n  $0 = v0 in o\nend\n"
    );
}

#[test]
fn single_operation_per_line() {
    for src in [CRITEO, EQUAL_TEST] {
        let p = canonicalize_source(src).unwrap();
        for s in &p.statements {
            if s.kind != StmtKind::Assign {
                continue;
            }
            let toks = lex(&s.text).unwrap();
            let ops = toks
                .iter()
                .filter(|t| {
                    t.kind == TokenKind::Punctuator
                        && matches!(
                            t.text.as_str(),
                            "+" | "-" | "*" | "/" | "%" | "===" | "!==" | "<" | ">" | "<=" | ">="
                                | "&" | "|" | "^" | "<<" | ">>" | ">>>"
                        )
                })
                .count();
            assert!(ops <= 1, "{}", s.text);
        }
    }
}

#[test]
fn temps_written_before_read() {
    for src in [CRITEO, EQUAL_TEST] {
        let p = canonicalize_source(src).unwrap();
        let mut written = std::collections::HashSet::new();
        for s in &p.statements {
            for r in s.reads.iter().filter(|r| is_temp(r)) {
                assert!(written.contains(r), "{r} read before write");
            }
            written.extend(s.writes.iter().cloned());
        }
    }
}

#[test]
fn emit_parse_round_trip() {
    let p = canonicalize_source(CRITEO).unwrap();
    let text = p.emit();
    let q = CanonicalProgram::from_text(&text);
    assert_eq!(q.len(), p.len());
    assert_eq!(q.emit(), text);
    assert_eq!(q.temp_count, p.temp_count);
    for (a, b) in p.statements.iter().zip(&q.statements) {
        assert_eq!(a.kind, b.kind, "{}", a.text);
        assert_eq!(a.reads, b.reads);
        assert_eq!(a.writes, b.writes);
    }
}
