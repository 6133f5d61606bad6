import pytest

from entente.jstokens import TokenizeError, check_source, strip_and_normalize, tokenize


def kinds(source):
    return [(t.kind, t.text) for t in tokenize(source)]


def test_tokenize_simple_statement():
    assert kinds("var a = 1;") == [
        ("ident", "var"),
        ("ident", "a"),
        ("punct", "="),
        ("num", "1"),
        ("punct", ";"),
    ]


def test_tokenize_string_and_template():
    toks = kinds("var s = 'a\\'b' + `x${1 + 2}y`;")
    assert ("str", "'a\\'b'") in toks
    assert any(k == "template" for k, _ in toks)


def test_tokenize_regex_vs_division():
    toks = kinds("var r = /ab[/]c/g; var d = a / b;")
    assert sum(1 for k, _ in toks if k == "regex") == 1


def test_comments_skipped_by_default():
    assert all(k != "comment" for k, _ in kinds("// hi\nvar a = 1; /* block */"))
    kept = tokenize("// hi\nvar a = 1;", keep_comments=True)
    assert kept[0].kind == "comment"


@pytest.mark.parametrize(
    "source",
    [
        "var s = \"never closed",
        "var t = `never closed",
        "/* never closed",
        "var r = /never closed",
    ],
)
def test_unterminated_constructs_raise(source):
    with pytest.raises(TokenizeError):
        tokenize(source)


@pytest.mark.parametrize(
    "source",
    [
        "var a = 1;",
        "function f(x) { return x + 1; }",
        "for (var i = 0; i < 10; i++) { f(i); }",
        "var o = {in: 1, delete: 2};",
        "m.delete(3); a.in;",
        "var x = a === b ? -1 : +1;",
        "var arr = [1,,2,]; f(a,);",
        "return;",
        "throw new TypeError('x');",
        "\"foo\".repeat(3);",
    ],
)
def test_check_accepts_valid(source):
    assert check_source(source).ok, source


@pytest.mark.parametrize(
    "source",
    [
        "var a = ;",
        "var = 1;",
        "x = )",
        "function f() { return 1;",
        "var s = \"unterminated",
        "a + ;",
        "typeof;",
        "var x = 1 +",
    ],
)
def test_check_rejects_invalid(source):
    assert not check_source(source).ok, source


def test_strip_and_normalize_drops_comments_and_whitespace():
    a = strip_and_normalize("var a = 1; // note\n")
    b = strip_and_normalize("var  a=1 ;")
    assert a == b == ["var", "a", "=", "1", ";"]
