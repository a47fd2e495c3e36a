//! Concrete syntax trees for Java-like method text.
//!
//! A recursive-descent parser over [`Token`]s covering the statement and
//! expression forms that appear in single-method patches: declarations,
//! control flow, switch, try/catch/resources, lambdas, generics, anonymous
//! classes. Node kinds follow tree-sitter-java naming. Only named nodes are
//! kept; punctuation and keywords do not appear as children.
//!
//! [`parse_prefix`] never fails: on a syntax error it re-parses the longest
//! prefix that parses once constructs still open at the cut are closed.

use super::lexer::{Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: &'static str,
    /// Role within the parent for name-like children (`name`, `field`,
    /// `parameter`); `None` for ordinary children.
    pub field: Option<&'static str>,
    /// Leaf text, or the operator of an operator expression.
    pub text: Option<String>,
    pub leaf: bool,
    pub children: Vec<Node>,
}

impl Node {
    fn new(kind: &'static str, children: Vec<Node>) -> Self {
        Self {
            kind,
            field: None,
            text: None,
            leaf: false,
            children,
        }
    }

    fn leaf(kind: &'static str, text: &str) -> Self {
        Self {
            kind,
            field: None,
            text: Some(text.to_string()),
            leaf: true,
            children: Vec::new(),
        }
    }

    fn op(mut self, op: &str) -> Self {
        self.text = Some(op.to_string());
        self
    }

    fn named(mut self, field: &'static str) -> Self {
        self.field = Some(field);
        self
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Node)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(Node::count).sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseError {
    /// Furthest token index the parser reached before failing.
    pub pos: usize,
}

type PResult<T> = Result<T, ParseError>;

const MODIFIERS: [&str; 12] = [
    "public", "protected", "private", "static", "final", "abstract", "synchronized", "native",
    "transient", "volatile", "strictfp", "default",
];
const ASSIGN_OPS: [&str; 12] = ["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="];

fn binary_prec(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 1,
        "&&" => 2,
        "|" => 3,
        "^" => 4,
        "&" => 5,
        "==" | "!=" => 6,
        "<" | ">" | "<=" | ">=" | "instanceof" => 7,
        "<<" | ">>" | ">>>" => 8,
        "+" | "-" => 9,
        "*" | "/" | "%" => 10,
        _ => return None,
    })
}

fn primitive_kind(word: &str) -> Option<&'static str> {
    Some(match word {
        "int" | "long" | "short" | "byte" | "char" => "integral_type",
        "float" | "double" => "floating_point_type",
        "boolean" => "boolean_type",
        "void" => "void_type",
        _ => return None,
    })
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    /// Characters of `toks[pos]` already consumed as `>` closers.
    split: usize,
    lenient: bool,
    furthest: usize,
}

impl<'t> Parser<'t> {
    fn new(toks: &'t [Token], lenient: bool) -> Self {
        Self {
            toks,
            pos: 0,
            split: 0,
            lenient,
            furthest: 0,
        }
    }

    fn fail<T>(&mut self) -> PResult<T> {
        self.furthest = self.furthest.max(self.pos);
        Err(ParseError { pos: self.furthest })
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn open_end(&self) -> bool {
        self.lenient && self.at_eof()
    }

    fn peek(&self) -> Option<&'t str> {
        self.toks.get(self.pos).map(|t| &t.text[self.split..])
    }

    fn peek_at(&self, n: usize) -> Option<&'t str> {
        if n == 0 {
            return self.peek();
        }
        self.toks.get(self.pos + n).map(|t| t.text.as_str())
    }

    fn kind(&self) -> Option<TokenKind> {
        self.toks.get(self.pos).map(|t| t.kind)
    }

    fn kind_at(&self, n: usize) -> Option<TokenKind> {
        self.toks.get(self.pos + n).map(|t| t.kind)
    }

    fn check(&self, s: &str) -> bool {
        self.peek() == Some(s)
    }

    fn is_ident(&self) -> bool {
        self.split == 0 && self.kind() == Some(TokenKind::Identifier)
    }

    fn advance(&mut self) -> &'t str {
        let t = self.peek().unwrap_or("");
        self.pos += 1;
        self.split = 0;
        self.furthest = self.furthest.max(self.pos);
        t
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.check(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) || self.open_end() {
            Ok(())
        } else {
            self.fail()
        }
    }

    /// Consumes one `>`, splitting `>>`, `>>>`, `>=` and friends.
    fn eat_gt(&mut self) -> PResult<()> {
        if self.open_end() {
            return Ok(());
        }
        match self.peek() {
            Some(t) if t.starts_with('>') => {
                if t.len() == 1 {
                    self.advance();
                } else {
                    self.split += 1;
                }
                Ok(())
            }
            _ => self.fail(),
        }
    }

    fn save(&self) -> (usize, usize) {
        (self.pos, self.split)
    }

    fn restore(&mut self, at: (usize, usize)) {
        self.pos = at.0;
        self.split = at.1;
    }

    fn ident(&mut self) -> PResult<Node> {
        if self.is_ident() {
            let t = self.advance();
            Ok(Node::leaf("identifier", t))
        } else {
            self.fail()
        }
    }

    // ---- top level and declarations ----

    fn program(&mut self) -> PResult<Node> {
        let mut items = Vec::new();
        while !self.at_eof() {
            items.push(self.top_item()?);
        }
        Ok(Node::new("program", items))
    }

    fn top_item(&mut self) -> PResult<Node> {
        let start = self.save();
        if let Some(decl) = self.try_member(false)? {
            return Ok(decl);
        }
        self.restore(start);
        self.statement()
    }

    /// Class, method, constructor or (in class bodies) field declaration.
    /// `Ok(None)` means the tokens do not start a declaration.
    fn try_member(&mut self, in_class: bool) -> PResult<Option<Node>> {
        let start = self.save();
        let modifiers = self.modifiers()?;
        if matches!(self.peek(), Some("class" | "interface" | "enum")) {
            return self.type_declaration(modifiers).map(Some);
        }
        let type_params = if self.check("<") {
            Some(self.type_parameters()?)
        } else {
            None
        };
        // constructor: Name ( ... ) {
        if self.is_ident() && self.peek_at(1) == Some("(") && (in_class || modifiers.is_some()) {
            let name = self.ident()?.named("name");
            let params = self.formal_parameters()?;
            let throws = self.throws()?;
            if !self.check("{") && !self.open_end() {
                self.restore(start);
                return Ok(None);
            }
            let body = self.block_as("constructor_body")?;
            let mut ch: Vec<Node> = modifiers.into_iter().chain(type_params).collect();
            ch.push(name);
            ch.push(params);
            ch.extend(throws);
            ch.push(body);
            return Ok(Some(Node::new("constructor_declaration", ch)));
        }
        let Ok(ty) = self.type_() else {
            self.restore(start);
            return Ok(None);
        };
        if !(self.is_ident() && (self.peek_at(1) == Some("(") || in_class)) {
            self.restore(start);
            return Ok(None);
        }
        if self.peek_at(1) != Some("(") {
            // field declaration
            let mut ch: Vec<Node> = modifiers.into_iter().collect();
            ch.push(ty);
            ch.extend(self.declarators()?);
            self.expect(";")?;
            return Ok(Some(Node::new("field_declaration", ch)));
        }
        let name = self.ident()?.named("name");
        let params = self.formal_parameters()?;
        let mut ch: Vec<Node> = modifiers.into_iter().chain(type_params).collect();
        ch.push(ty);
        ch.push(name);
        ch.push(params);
        if let Some(d) = self.dims() {
            ch.push(d);
        }
        ch.extend(self.throws()?);
        if self.eat("default") {
            ch.push(self.element_value()?);
        }
        if self.check("{") {
            ch.push(self.block()?);
        } else {
            self.expect(";")?;
        }
        Ok(Some(Node::new("method_declaration", ch)))
    }

    fn modifiers(&mut self) -> PResult<Option<Node>> {
        let mut ch = Vec::new();
        let mut any = false;
        loop {
            match self.peek() {
                Some(m) if MODIFIERS.contains(&m) && self.split == 0 => {
                    // `default:` inside switch is not a modifier
                    if m == "default" && matches!(self.peek_at(1), Some(":" | "->")) {
                        break;
                    }
                    self.advance();
                    any = true;
                }
                Some("@") if self.peek_at(1) != Some("interface") => {
                    ch.push(self.annotation()?);
                    any = true;
                }
                _ => break,
            }
        }
        Ok(any.then(|| Node::new("modifiers", ch)))
    }

    fn annotation(&mut self) -> PResult<Node> {
        self.expect("@")?;
        let name = self.qualified_name()?;
        if self.check("(") {
            self.advance();
            let mut args = Vec::new();
            while !self.check(")") && !self.open_end() {
                if self.is_ident() && self.peek_at(1) == Some("=") {
                    let key = self.ident()?.named("name");
                    self.advance();
                    let value = self.element_value()?;
                    args.push(Node::new("element_value_pair", vec![key, value]));
                } else {
                    args.push(self.element_value()?);
                }
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(")")?;
            return Ok(Node::new(
                "annotation",
                vec![name, Node::new("annotation_argument_list", args)],
            ));
        }
        Ok(Node::new("marker_annotation", vec![name]))
    }

    fn element_value(&mut self) -> PResult<Node> {
        if self.check("@") {
            return self.annotation();
        }
        if self.check("{") {
            return self.array_initializer();
        }
        self.ternary()
    }

    fn qualified_name(&mut self) -> PResult<Node> {
        let mut node = self.ident()?;
        while self.check(".") && self.kind_at(1) == Some(TokenKind::Identifier) {
            self.advance();
            let next = self.ident()?;
            node = Node::new("scoped_identifier", vec![node, next]);
        }
        Ok(node)
    }

    fn type_declaration(&mut self, modifiers: Option<Node>) -> PResult<Node> {
        let keyword = self.advance();
        let name = self.ident()?.named("name");
        let mut ch: Vec<Node> = modifiers.into_iter().collect();
        ch.push(name);
        if self.check("<") {
            ch.push(self.type_parameters()?);
        }
        if self.eat("extends") {
            let mut types = vec![self.type_()?];
            while self.eat(",") {
                types.push(self.type_()?);
            }
            ch.push(Node::new(if keyword == "class" { "superclass" } else { "extends_interfaces" }, types));
        }
        if self.eat("implements") {
            let mut types = vec![self.type_()?];
            while self.eat(",") {
                types.push(self.type_()?);
            }
            ch.push(Node::new("super_interfaces", types));
        }
        let (kind, body) = match keyword {
            "class" => ("class_declaration", self.class_body("class_body")?),
            "interface" => ("interface_declaration", self.class_body("interface_body")?),
            _ => ("enum_declaration", self.enum_body()?),
        };
        ch.push(body);
        Ok(Node::new(kind, ch))
    }

    fn class_body(&mut self, kind: &'static str) -> PResult<Node> {
        self.expect("{")?;
        let members = self.members()?;
        self.expect("}")?;
        Ok(Node::new(kind, members))
    }

    fn members(&mut self) -> PResult<Vec<Node>> {
        let mut members = Vec::new();
        while !self.check("}") && !self.at_eof() {
            if self.eat(";") {
                continue;
            }
            if self.check("{") {
                members.push(self.block()?);
                continue;
            }
            if self.check("static") && self.peek_at(1) == Some("{") {
                self.advance();
                members.push(Node::new("static_initializer", vec![self.block()?]));
                continue;
            }
            match self.try_member(true)? {
                Some(m) => members.push(m),
                None => return self.fail(),
            }
        }
        if self.at_eof() && !self.lenient {
            return self.fail();
        }
        Ok(members)
    }

    fn enum_body(&mut self) -> PResult<Node> {
        self.expect("{")?;
        let mut ch = Vec::new();
        while self.is_ident() || self.check("@") {
            let mods = self.modifiers()?;
            let mut c: Vec<Node> = mods.into_iter().collect();
            c.push(self.ident()?.named("name"));
            if self.check("(") {
                c.push(self.arguments()?);
            }
            if self.check("{") {
                c.push(self.class_body("class_body")?);
            }
            ch.push(Node::new("enum_constant", c));
            if !self.eat(",") {
                break;
            }
        }
        if self.eat(";") {
            ch.push(Node::new("enum_body_declarations", self.members()?));
        }
        self.expect("}")?;
        Ok(Node::new("enum_body", ch))
    }

    fn type_parameters(&mut self) -> PResult<Node> {
        self.expect("<")?;
        let mut ch = Vec::new();
        loop {
            while self.check("@") {
                self.annotation()?;
            }
            let mut p = vec![self.ident()?.named("name")];
            if self.eat("extends") {
                let mut bounds = vec![self.type_()?];
                while self.eat("&") {
                    bounds.push(self.type_()?);
                }
                p.push(Node::new("type_bound", bounds));
            }
            ch.push(Node::new("type_parameter", p));
            if !self.eat(",") {
                break;
            }
        }
        self.eat_gt()?;
        Ok(Node::new("type_parameters", ch))
    }

    fn formal_parameters(&mut self) -> PResult<Node> {
        self.expect("(")?;
        let mut ch = Vec::new();
        while !self.check(")") && !self.open_end() {
            let mut p: Vec<Node> = self.modifiers()?.into_iter().collect();
            p.push(self.type_()?);
            let spread = self.eat("...");
            if self.check("this") {
                self.advance();
                p.push(Node::leaf("this", "this"));
                ch.push(Node::new("receiver_parameter", p));
            } else {
                p.push(self.ident()?.named("name"));
                if let Some(d) = self.dims() {
                    p.push(d);
                }
                ch.push(Node::new(if spread { "spread_parameter" } else { "formal_parameter" }, p));
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok(Node::new("formal_parameters", ch))
    }

    fn throws(&mut self) -> PResult<Option<Node>> {
        if !self.eat("throws") {
            return Ok(None);
        }
        let mut types = vec![self.type_()?];
        while self.eat(",") {
            types.push(self.type_()?);
        }
        Ok(Some(Node::new("throws", types)))
    }

    fn dims(&mut self) -> Option<Node> {
        let mut n = 0;
        while self.check("[") && self.peek_at(1) == Some("]") {
            self.advance();
            self.advance();
            n += 1;
        }
        (n > 0).then(|| Node::leaf("dimensions", &"[]".repeat(n)))
    }

    // ---- types ----

    fn type_(&mut self) -> PResult<Node> {
        let base = self.base_type()?;
        Ok(match self.dims() {
            Some(d) => Node::new("array_type", vec![base, d]),
            None => base,
        })
    }

    fn base_type(&mut self) -> PResult<Node> {
        while self.check("@") {
            self.annotation()?;
        }
        if self.split == 0 {
            if let Some(kind) = self.peek().and_then(primitive_kind) {
                let t = self.advance();
                return Ok(Node::leaf(kind, t));
            }
        }
        if !self.is_ident() {
            return self.fail();
        }
        let t = self.advance();
        let mut node = Node::leaf("type_identifier", t);
        loop {
            if self.check("<") {
                let args = self.type_arguments()?;
                node = Node::new("generic_type", vec![node, args]);
            }
            if self.check(".") && self.kind_at(1) == Some(TokenKind::Identifier) {
                self.advance();
                let t = self.advance();
                node = Node::new("scoped_type_identifier", vec![node, Node::leaf("type_identifier", t)]);
            } else {
                break;
            }
        }
        Ok(node)
    }

    fn type_arguments(&mut self) -> PResult<Node> {
        self.expect("<")?;
        let mut ch = Vec::new();
        while !self.peek().is_some_and(|t| t.starts_with('>')) && !self.open_end() {
            if self.eat("?") {
                let mut w = Vec::new();
                if self.eat("extends") || self.eat("super") {
                    w.push(self.type_()?);
                }
                ch.push(Node::new("wildcard", w));
            } else {
                ch.push(self.type_()?);
            }
            if !self.eat(",") {
                break;
            }
        }
        self.eat_gt()?;
        Ok(Node::new("type_arguments", ch))
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Node> {
        self.block_as("block")
    }

    fn block_as(&mut self, kind: &'static str) -> PResult<Node> {
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.check("}") && !self.open_end() {
            if self.at_eof() {
                return self.fail();
            }
            stmts.push(self.statement()?);
        }
        self.expect("}")?;
        Ok(Node::new(kind, stmts))
    }

    fn statement(&mut self) -> PResult<Node> {
        let Some(t) = self.peek() else {
            return self.fail();
        };
        match t {
            "{" => self.block(),
            ";" => {
                self.advance();
                Ok(Node::new("empty_statement", vec![]))
            }
            "if" => {
                self.advance();
                let cond = self.parenthesized()?;
                let then = self.statement()?;
                let mut ch = vec![cond, then];
                if self.eat("else") {
                    ch.push(self.statement()?);
                }
                Ok(Node::new("if_statement", ch))
            }
            "while" => {
                self.advance();
                let cond = self.parenthesized()?;
                let body = self.statement()?;
                Ok(Node::new("while_statement", vec![cond, body]))
            }
            "do" => {
                self.advance();
                let body = self.statement()?;
                self.expect("while")?;
                let cond = self.parenthesized()?;
                self.expect(";")?;
                Ok(Node::new("do_statement", vec![body, cond]))
            }
            "for" => self.for_statement(),
            "return" => {
                self.advance();
                let mut ch = Vec::new();
                if !self.check(";") && !self.open_end() {
                    ch.push(self.expression()?);
                }
                self.expect(";")?;
                Ok(Node::new("return_statement", ch))
            }
            "throw" => {
                self.advance();
                let e = self.expression()?;
                self.expect(";")?;
                Ok(Node::new("throw_statement", vec![e]))
            }
            "break" | "continue" => {
                self.advance();
                let mut ch = Vec::new();
                if self.is_ident() {
                    ch.push(self.ident()?.named("name"));
                }
                self.expect(";")?;
                Ok(Node::new(if t == "break" { "break_statement" } else { "continue_statement" }, ch))
            }
            "switch" => {
                let s = self.switch()?;
                self.eat(";");
                Ok(Node { kind: "switch_statement", ..s })
            }
            "try" => self.try_statement(),
            "synchronized" if self.peek_at(1) == Some("(") => {
                self.advance();
                let lock = self.parenthesized()?;
                let body = self.block()?;
                Ok(Node::new("synchronized_statement", vec![lock, body]))
            }
            "assert" => {
                self.advance();
                let mut ch = vec![self.expression()?];
                if self.eat(":") {
                    ch.push(self.expression()?);
                }
                self.expect(";")?;
                Ok(Node::new("assert_statement", ch))
            }
            "class" | "interface" | "enum" => self.type_declaration(None),
            // contextual keyword: `yield x;` but not `yield = 1;` or `yield(x);`
            "yield"
                if !matches!(self.peek_at(1), Some("(" | "." | "[" | ";" | "++" | "--" | "->" | "::"))
                    && !self.peek_at(1).is_some_and(|t| ASSIGN_OPS.contains(&t)) =>
            {
                self.advance();
                let e = self.expression()?;
                self.expect(";")?;
                Ok(Node::new("yield_statement", vec![e]))
            }
            _ => {
                if self.is_ident() && self.peek_at(1) == Some(":") {
                    let label = self.ident()?.named("name");
                    self.advance();
                    let body = self.statement()?;
                    return Ok(Node::new("labeled_statement", vec![label, body]));
                }
                let start = self.save();
                if let Some(decl) = self.try_local_declaration()? {
                    self.expect(";")?;
                    return Ok(decl);
                }
                self.restore(start);
                if matches!(self.peek(), Some("final" | "abstract" | "static" | "@")) {
                    if let Some(d) = self.try_member(false)? {
                        return Ok(d);
                    }
                    self.restore(start);
                }
                let e = self.expression()?;
                self.expect(";")?;
                Ok(Node::new("expression_statement", vec![e]))
            }
        }
    }

    /// `[modifiers] Type name [= init] {, name [= init]}` without the `;`.
    fn try_local_declaration(&mut self) -> PResult<Option<Node>> {
        let start = self.save();
        let modifiers = self.modifiers()?;
        if matches!(self.peek(), Some("class" | "interface" | "enum")) {
            return self.type_declaration(modifiers).map(Some);
        }
        let Ok(ty) = self.type_() else {
            self.restore(start);
            return Ok(None);
        };
        let follows = self.is_ident()
            && (matches!(self.peek_at(1), Some("=" | ";" | "," | "[" | ":")) || self.pos + 1 >= self.toks.len());
        if !follows {
            self.restore(start);
            return Ok(None);
        }
        let mut ch: Vec<Node> = modifiers.into_iter().collect();
        ch.push(ty);
        ch.extend(self.declarators()?);
        Ok(Some(Node::new("local_variable_declaration", ch)))
    }

    fn declarators(&mut self) -> PResult<Vec<Node>> {
        let mut out = Vec::new();
        loop {
            let mut d = vec![self.ident()?.named("name")];
            if let Some(dims) = self.dims() {
                d.push(dims);
            }
            if self.eat("=") {
                d.push(if self.check("{") {
                    self.array_initializer()?
                } else {
                    self.expression()?
                });
            }
            out.push(Node::new("variable_declarator", d));
            if !self.eat(",") {
                break;
            }
        }
        Ok(out)
    }

    fn for_statement(&mut self) -> PResult<Node> {
        self.advance();
        self.expect("(")?;
        let start = self.save();
        // enhanced for: [modifiers] Type name : expr
        let mods = self.modifiers()?;
        if let Ok(ty) = self.type_() {
            if self.is_ident() && self.peek_at(1) == Some(":") {
                let name = self.ident()?.named("name");
                self.advance();
                let value = self.expression()?;
                self.expect(")")?;
                let body = self.statement()?;
                let mut ch: Vec<Node> = mods.into_iter().collect();
                ch.extend([ty, name, value, body]);
                return Ok(Node::new("enhanced_for_statement", ch));
            }
        }
        self.restore(start);
        let mut ch = Vec::new();
        if !self.check(";") {
            if let Some(decl) = self.try_local_declaration()? {
                ch.push(decl);
            } else {
                self.restore(start);
                ch.push(self.expression()?);
                while self.eat(",") {
                    ch.push(self.expression()?);
                }
            }
        }
        self.expect(";")?;
        if !self.check(";") && !self.open_end() {
            ch.push(self.expression()?);
        }
        self.expect(";")?;
        if !self.check(")") && !self.open_end() {
            ch.push(self.expression()?);
            while self.eat(",") {
                ch.push(self.expression()?);
            }
        }
        self.expect(")")?;
        ch.push(self.statement()?);
        Ok(Node::new("for_statement", ch))
    }

    fn try_statement(&mut self) -> PResult<Node> {
        self.advance();
        let mut ch = Vec::new();
        let mut kind = "try_statement";
        if self.check("(") {
            kind = "try_with_resources_statement";
            self.advance();
            let mut resources = Vec::new();
            while !self.check(")") && !self.open_end() {
                let start = self.save();
                let res = match self.try_local_declaration()? {
                    Some(d) => d,
                    None => {
                        self.restore(start);
                        self.expression()?
                    }
                };
                resources.push(Node::new("resource", vec![res]));
                if !self.eat(";") {
                    break;
                }
            }
            self.expect(")")?;
            ch.push(Node::new("resource_specification", resources));
        }
        ch.push(self.block()?);
        while self.check("catch") {
            self.advance();
            self.expect("(")?;
            let mut param: Vec<Node> = self.modifiers()?.into_iter().collect();
            let mut types = vec![self.type_()?];
            while self.eat("|") {
                types.push(self.type_()?);
            }
            param.push(Node::new("catch_type", types));
            param.push(self.ident()?.named("name"));
            self.expect(")")?;
            let body = self.block()?;
            ch.push(Node::new(
                "catch_clause",
                vec![Node::new("catch_formal_parameter", param), body],
            ));
        }
        if self.eat("finally") {
            ch.push(Node::new("finally_clause", vec![self.block()?]));
        }
        Ok(Node::new(kind, ch))
    }

    fn switch(&mut self) -> PResult<Node> {
        self.advance();
        let value = self.parenthesized()?;
        self.expect("{")?;
        let mut groups = Vec::new();
        while !self.check("}") && !self.open_end() {
            let mut labels = Vec::new();
            let mut arrow = false;
            while matches!(self.peek(), Some("case" | "default")) {
                let mut values = Vec::new();
                if self.advance() == "case" {
                    values.push(self.ternary()?);
                    while self.eat(",") {
                        values.push(self.ternary()?);
                    }
                }
                labels.push(Node::new("switch_label", values));
                if self.eat("->") {
                    arrow = true;
                    break;
                }
                self.expect(":")?;
            }
            if labels.is_empty() {
                return self.fail();
            }
            if arrow {
                let body = if self.check("{") || self.check("throw") {
                    self.statement()?
                } else {
                    let e = self.expression()?;
                    self.expect(";")?;
                    Node::new("expression_statement", vec![e])
                };
                labels.push(body);
                groups.push(Node::new("switch_rule", labels));
                continue;
            }
            while !matches!(self.peek(), Some("case" | "default" | "}")) && !self.open_end() {
                if self.check("default") && !matches!(self.peek_at(1), Some(":" | "->")) {
                    labels.push(self.statement()?);
                    continue;
                }
                labels.push(self.statement()?);
            }
            groups.push(Node::new("switch_block_statement_group", labels));
        }
        self.expect("}")?;
        Ok(Node::new(
            "switch_expression",
            vec![value, Node::new("switch_block", groups)],
        ))
    }

    fn parenthesized(&mut self) -> PResult<Node> {
        self.expect("(")?;
        let e = self.expression()?;
        self.expect(")")?;
        Ok(Node::new("parenthesized_expression", vec![e]))
    }

    // ---- expressions ----

    fn expression(&mut self) -> PResult<Node> {
        if self.lambda_ahead() {
            return self.lambda();
        }
        let lhs = self.ternary()?;
        if let Some(op) = self.peek().filter(|t| ASSIGN_OPS.contains(t)) {
            self.advance();
            let rhs = self.expression()?;
            return Ok(Node::new("assignment_expression", vec![lhs, rhs]).op(op));
        }
        Ok(lhs)
    }

    fn lambda_ahead(&self) -> bool {
        if self.split != 0 {
            return false;
        }
        if self.is_ident() && self.peek_at(1) == Some("->") {
            return true;
        }
        if !self.check("(") {
            return false;
        }
        let mut depth = 0usize;
        for (i, t) in self.toks[self.pos..].iter().enumerate() {
            match t.text.as_str() {
                "(" => depth += 1,
                ")" => {
                    depth -= 1;
                    if depth == 0 {
                        return self.peek_at(i + 1) == Some("->");
                    }
                }
                ";" | "{" | "}" => return false,
                _ => {}
            }
        }
        false
    }

    fn lambda(&mut self) -> PResult<Node> {
        let params = if self.is_ident() {
            self.ident()?.named("parameter")
        } else {
            let inferred = self.peek_at(1) == Some(")")
                || (self.kind_at(1) == Some(TokenKind::Identifier)
                    && matches!(self.peek_at(2), Some("," | ")")));
            if inferred {
                self.advance();
                let mut ids = Vec::new();
                while !self.check(")") {
                    ids.push(self.ident()?.named("parameter"));
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(")")?;
                Node::new("inferred_parameters", ids)
            } else {
                self.formal_parameters()?
            }
        };
        self.expect("->")?;
        let body = if self.check("{") {
            self.block()?
        } else {
            self.expression()?
        };
        Ok(Node::new("lambda_expression", vec![params, body]))
    }

    fn ternary(&mut self) -> PResult<Node> {
        let cond = self.binary(1)?;
        if !self.eat("?") {
            return Ok(cond);
        }
        let then = self.expression()?;
        self.expect(":")?;
        let other = if self.lambda_ahead() {
            self.lambda()?
        } else {
            self.ternary()?
        };
        Ok(Node::new("ternary_expression", vec![cond, then, other]))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Node> {
        let mut left = self.unary()?;
        while let Some(op) = self.peek() {
            let Some(prec) = binary_prec(op) else { break };
            if prec < min_prec {
                break;
            }
            self.advance();
            if op == "instanceof" {
                let mut ch = vec![left];
                self.eat("final");
                ch.push(self.type_()?);
                if self.is_ident() {
                    ch.push(self.ident()?.named("name"));
                }
                left = Node::new("instanceof_expression", ch);
                continue;
            }
            let right = self.binary(prec + 1)?;
            left = Node::new("binary_expression", vec![left, right]).op(op);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Node> {
        match self.peek() {
            Some(op @ ("+" | "-" | "!" | "~")) => {
                self.advance();
                let operand = self.unary()?;
                Ok(Node::new("unary_expression", vec![operand]).op(op))
            }
            Some(op @ ("++" | "--")) => {
                self.advance();
                let operand = self.unary()?;
                Ok(Node::new("update_expression", vec![operand]).op(op))
            }
            Some("(") => {
                if let Some(cast) = self.try_cast()? {
                    return Ok(cast);
                }
                self.postfix()
            }
            _ => self.postfix(),
        }
    }

    fn try_cast(&mut self) -> PResult<Option<Node>> {
        let start = self.save();
        self.advance();
        let primitive = self.peek().and_then(primitive_kind).is_some();
        let Ok(mut ty) = self.type_() else {
            self.restore(start);
            return Ok(None);
        };
        let mut bounds = Vec::new();
        while self.eat("&") {
            match self.type_() {
                Ok(t) => bounds.push(t),
                Err(_) => {
                    self.restore(start);
                    return Ok(None);
                }
            }
        }
        if !self.eat(")") {
            self.restore(start);
            return Ok(None);
        }
        let operand_ok = match self.kind() {
            Some(TokenKind::Identifier | TokenKind::Literal | TokenKind::Number | TokenKind::Str | TokenKind::Char) => true,
            Some(TokenKind::Keyword) => matches!(self.peek(), Some("this" | "super" | "new" | "switch"))
                || self.peek().and_then(primitive_kind).is_some(),
            _ => matches!(self.peek(), Some("(" | "!" | "~"))
                || (primitive && matches!(self.peek(), Some("+" | "-" | "++" | "--"))),
        };
        if !operand_ok || self.split != 0 {
            self.restore(start);
            return Ok(None);
        }
        if !bounds.is_empty() {
            bounds.insert(0, ty);
            ty = Node::new("intersection_type", bounds);
        }
        let operand = if self.lambda_ahead() {
            self.lambda()?
        } else {
            self.unary()?
        };
        Ok(Some(Node::new("cast_expression", vec![ty, operand])))
    }

    fn postfix(&mut self) -> PResult<Node> {
        let mut node = self.primary()?;
        loop {
            match self.peek() {
                Some(".") => {
                    self.advance();
                    if self.check("<") {
                        let targs = self.type_arguments()?;
                        let name = self.ident()?.named("name");
                        let args = self.arguments()?;
                        node = Node::new("method_invocation", vec![node, targs, name, args]);
                    } else if self.eat("class") {
                        node = Node::new("class_literal", vec![node]);
                    } else if self.eat("this") {
                        node = Node::new("field_access", vec![node, Node::leaf("this", "this")]);
                    } else if self.check("new") {
                        let creation = self.creation()?;
                        node = Node::new("object_creation_expression", vec![node, creation]);
                    } else {
                        let name = self.ident()?;
                        if self.check("(") {
                            let args = self.arguments()?;
                            node = Node::new("method_invocation", vec![node, name.named("name"), args]);
                        } else {
                            node = Node::new("field_access", vec![node, name.named("field")]);
                        }
                    }
                }
                Some("[") => {
                    self.advance();
                    let index = self.expression()?;
                    self.expect("]")?;
                    node = Node::new("array_access", vec![node, index]);
                }
                Some("::") => {
                    self.advance();
                    let target = if self.eat("new") {
                        Node::leaf("new", "new")
                    } else {
                        self.ident()?.named("name")
                    };
                    node = Node::new("method_reference", vec![node, target]);
                }
                Some(op @ ("++" | "--")) => {
                    self.advance();
                    node = Node::new("update_expression", vec![node]).op(op);
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn primary(&mut self) -> PResult<Node> {
        let Some(t) = self.peek() else {
            return self.fail();
        };
        match self.kind() {
            Some(TokenKind::Number) => {
                self.advance();
                let lower = t.to_ascii_lowercase();
                let float = !lower.starts_with("0x")
                    && (lower.contains('.') || lower.contains('e') || lower.ends_with('f') || lower.ends_with('d'));
                return Ok(Node::leaf(
                    if float { "floating_point_literal" } else { "integer_literal" },
                    t,
                ));
            }
            Some(TokenKind::Str) => {
                self.advance();
                return Ok(Node::leaf("string_literal", t));
            }
            Some(TokenKind::Char) => {
                self.advance();
                return Ok(Node::leaf("character_literal", t));
            }
            Some(TokenKind::Literal) => {
                self.advance();
                return Ok(Node::leaf(if t == "null" { "null_literal" } else { "boolean_literal" }, t));
            }
            Some(TokenKind::Identifier) if self.split == 0 => {
                let name = self.ident()?;
                if self.check("(") {
                    let args = self.arguments()?;
                    return Ok(Node::new("method_invocation", vec![name.named("name"), args]));
                }
                return Ok(name);
            }
            _ => {}
        }
        match t {
            "this" | "super" => {
                self.advance();
                let leaf = Node::leaf(if t == "this" { "this" } else { "super" }, t);
                if self.check("(") {
                    let args = self.arguments()?;
                    return Ok(Node::new("explicit_constructor_invocation", vec![leaf, args]));
                }
                Ok(leaf)
            }
            "new" => self.creation(),
            "(" => self.parenthesized(),
            "switch" => self.switch(),
            _ if primitive_kind(t).is_some() && self.split == 0 => {
                // int.class, int[].class, int[]::new
                let ty = self.type_()?;
                if self.check(".") && self.peek_at(1) == Some("class") {
                    self.advance();
                    self.advance();
                    return Ok(Node::new("class_literal", vec![ty]));
                }
                if self.check("::") {
                    return Ok(ty);
                }
                self.fail()
            }
            _ => self.fail(),
        }
    }

    fn creation(&mut self) -> PResult<Node> {
        self.expect("new")?;
        let ty = self.base_type()?;
        if self.check("[") {
            let mut ch = vec![ty];
            while self.check("[") && self.peek_at(1) != Some("]") {
                self.advance();
                let size = self.expression()?;
                self.expect("]")?;
                ch.push(Node::new("dimensions_expr", vec![size]));
            }
            if let Some(d) = self.dims() {
                ch.push(d);
            }
            if self.check("{") {
                ch.push(self.array_initializer()?);
            }
            return Ok(Node::new("array_creation_expression", ch));
        }
        let args = self.arguments()?;
        let mut ch = vec![ty, args];
        if self.check("{") {
            ch.push(self.class_body("class_body")?);
        }
        Ok(Node::new("object_creation_expression", ch))
    }

    fn arguments(&mut self) -> PResult<Node> {
        self.expect("(")?;
        let mut args = Vec::new();
        while !self.check(")") && !self.open_end() {
            args.push(self.expression()?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok(Node::new("argument_list", args))
    }

    fn array_initializer(&mut self) -> PResult<Node> {
        self.expect("{")?;
        let mut items = Vec::new();
        while !self.check("}") && !self.open_end() {
            items.push(if self.check("{") {
                self.array_initializer()?
            } else {
                self.expression()?
            });
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(Node::new("array_initializer", items))
    }
}

/// Parses the whole token sequence or reports where it failed.
pub fn parse_strict(tokens: &[Token]) -> Result<Node, ParseError> {
    let mut p = Parser::new(tokens, false);
    p.program()
}

/// Parses the longest prefix of `tokens` that forms a syntax tree when
/// every construct still open at the cut is closed. Returns an empty
/// `program` when no prefix parses.
pub fn parse_prefix(tokens: &[Token]) -> Node {
    let mut end = match parse_strict(tokens) {
        Ok(tree) => return tree,
        Err(e) => e.pos.min(tokens.len()),
    };
    loop {
        if end == 0 {
            return Node::new("program", Vec::new());
        }
        let mut p = Parser::new(&tokens[..end], true);
        match p.program() {
            Ok(tree) => return tree,
            Err(e) => end = if e.pos < end { e.pos } else { end - 1 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codesim::lexer::{tokenize, KeywordSet};

    fn toks(src: &str) -> Vec<Token> {
        tokenize(src, &KeywordSet::java())
    }

    fn sexp(n: &Node) -> String {
        if n.children.is_empty() {
            return n.kind.to_string();
        }
        let inner: Vec<String> = n.children.iter().map(sexp).collect();
        format!("({} {})", n.kind, inner.join(" "))
    }

    fn parse(src: &str) -> Node {
        parse_strict(&toks(src)).unwrap_or_else(|e| panic!("parse failed at {}: {src}", e.pos))
    }

    #[test]
    fn method_declaration() {
        let tree = parse("public int f(int a) { return a + 1; }");
        assert_eq!(
            sexp(&tree),
            "(program (method_declaration modifiers integral_type identifier (formal_parameters (formal_parameter integral_type identifier)) (block (return_statement (binary_expression identifier integer_literal)))))"
        );
    }

    #[test]
    fn declarations_vs_expressions() {
        let t = sexp(&parse("List<Map<String, Integer>> m = new HashMap<>(); x = y; a < b;"));
        assert!(t.contains("(local_variable_declaration (generic_type type_identifier (type_arguments (generic_type type_identifier (type_arguments type_identifier type_identifier)))) (variable_declarator identifier (object_creation_expression (generic_type type_identifier type_arguments) argument_list)))"), "{t}");
        assert!(t.contains("(expression_statement (assignment_expression identifier identifier))"));
        assert!(t.contains("(expression_statement (binary_expression identifier identifier))"));
    }

    #[test]
    fn shifts_are_not_type_closers() {
        let t = sexp(&parse("x = a >> 2; y = b >>> c;"));
        assert_eq!(t.matches("binary_expression").count(), 2);
    }

    #[test]
    fn control_flow() {
        let src = r#"
            for (int i = 0; i < n; i++) { if (a[i] == null) continue; else break; }
            for (String s : items) total += s.length();
            while (x > 0) x--;
            do { x++; } while (x < 10);
            switch (k) { case 1: case 2: f(); break; default: g(); }
            try (InputStream in = open()) { read(in); } catch (IOException | RuntimeException e) { throw new IllegalStateException(e); } finally { close(); }
            label: for (;;) { break label; }
            synchronized (lock) { n++; }
            assert n > 0 : "positive";
        "#;
        let t = sexp(&parse(src));
        for kind in [
            "for_statement",
            "enhanced_for_statement",
            "while_statement",
            "do_statement",
            "switch_block_statement_group",
            "try_with_resources_statement",
            "catch_type",
            "finally_clause",
            "labeled_statement",
            "synchronized_statement",
            "assert_statement",
        ] {
            assert!(t.contains(kind), "missing {kind} in {t}");
        }
    }

    #[test]
    fn expressions() {
        let src = "Object o = (String) x; int v = c ? 1 : -2; Runnable r = () -> run(); f(a -> a * 2, (p, q) -> p + q); String[] s = new String[] {\"a\"}; int[][] g = new int[3][]; Class<?> k = int.class; boolean b = o instanceof String str; obj.field.method(1).other[2]++; Supplier<List<String>> sup = ArrayList::new;";
        let t = sexp(&parse(src));
        for kind in [
            "cast_expression",
            "ternary_expression",
            "lambda_expression",
            "inferred_parameters",
            "array_creation_expression",
            "array_initializer",
            "class_literal",
            "instanceof_expression",
            "method_invocation",
            "field_access",
            "array_access",
            "update_expression",
            "method_reference",
            "wildcard",
        ] {
            assert!(t.contains(kind), "missing {kind} in {t}");
        }
    }

    #[test]
    fn parenthesized_is_not_cast() {
        let t = sexp(&parse("y = (a) + b; z = (a + b) * c;"));
        assert!(!t.contains("cast_expression"), "{t}");
    }

    #[test]
    fn classes_and_switch_rules() {
        let src = r#"
            @Override
            public String toString() {
                Comparator<T> c = new Comparator<T>() {
                    @Override public int compare(T a, T b) { return 0; }
                };
                String r = switch (k) { case A -> "a"; case B, C -> { yield "b"; } default -> throw new X(); };
                return r;
            }
        "#;
        let t = sexp(&parse(src));
        assert!(t.contains("marker_annotation"));
        assert!(t.contains("class_body"));
        assert!(t.contains("switch_rule"));
    }

    #[test]
    fn constructors_and_nested_types() {
        let src = "class A<T extends Comparable<T>> extends B implements C, D { private final int x = 1; A(int x) { this(x, 2); } static { init(); } enum E { P, Q(1) { } ; void m() {} } }";
        let t = sexp(&parse(src));
        for kind in ["class_declaration", "field_declaration", "constructor_declaration", "explicit_constructor_invocation", "static_initializer", "enum_declaration", "enum_constant", "type_bound"] {
            assert!(t.contains(kind), "missing {kind} in {t}");
        }
    }

    #[test]
    fn strict_rejects_broken_code() {
        assert!(parse_strict(&toks("int f() { return 1; ")).is_err());
        assert!(parse_strict(&toks("int x = ;")).is_err());
        assert!(parse_strict(&toks(") (")).is_err());
    }

    #[test]
    fn prefix_recovers_truncated_method() {
        let tree = parse_prefix(&toks("int f(int a) { int b = a * 2; return b +"));
        let t = sexp(&tree);
        assert!(t.starts_with("(program (method_declaration"), "{t}");
        assert!(t.contains("local_variable_declaration"), "{t}");
    }

    #[test]
    fn prefix_of_garbage_is_empty() {
        let tree = parse_prefix(&toks(") ) }"));
        assert!(tree.children.is_empty());
        assert!(parse_prefix(&[]).children.is_empty());
    }

    #[test]
    fn prefix_stops_at_bad_token() {
        let tree = parse_prefix(&toks("x = 1; y = 2; ) z = 3;"));
        assert_eq!(tree.children.len(), 2);
    }
}
