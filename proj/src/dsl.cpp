#include "calmstore/dsl.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <sstream>

namespace calmstore::dsl {

const char* cmp_name(CmpOp op) {
  switch (op) {
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Eq: return "==";
  }
  return "?";
}

bool operator==(const AstNode& a, const AstNode& b) {
  if (a.kind != b.kind || a.source != b.source ||
      a.projection != b.projection || a.pred != b.pred ||
      a.fields != b.fields || a.cmp != b.cmp || a.literal != b.literal ||
      a.children.size() != b.children.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!(*a.children[i] == *b.children[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------- lexer

namespace {

enum class TokKind { Ident, Number, String, Cmp, LParen, RParen, Comma, End };

struct Token {
  TokKind kind;
  std::string text;
  std::int64_t number = 0;
  CmpOp cmp = CmpOp::Gt;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_ws();
    Token tok;
    tok.line = line_;
    tok.col = col_;
    if (pos_ >= text_.size()) {
      tok.kind = TokKind::End;
      return tok;
    }
    char c = text_[pos_];
    if (c == '(') return single(TokKind::LParen, "(");
    if (c == ')') return single(TokKind::RParen, ")");
    if (c == ',') return single(TokKind::Comma, ",");
    if (c == '"') return lex_string(tok);
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
      return lex_number(tok);
    }
    if (c == '=' || c == '>' || c == '<') return lex_cmp(tok);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      return lex_ident(tok);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_,
                     col_);
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      advance();
    }
  }

  Token single(TokKind kind, std::string text) {
    Token tok{kind, std::move(text), 0, CmpOp::Gt, line_, col_};
    advance();
    return tok;
  }

  Token lex_string(Token tok) {
    advance();  // opening quote
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      out += text_[pos_];
      advance();
    }
    if (pos_ >= text_.size()) {
      throw ParseError("unterminated string literal", tok.line, tok.col);
    }
    advance();  // closing quote
    tok.kind = TokKind::String;
    tok.text = std::move(out);
    return tok;
  }

  Token lex_number(Token tok) {
    std::string digits;
    if (text_[pos_] == '-') {
      digits += '-';
      advance();
    }
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      digits += text_[pos_];
      advance();
    }
    if (digits.empty() || digits == "-") {
      throw ParseError("malformed number", tok.line, tok.col);
    }
    tok.kind = TokKind::Number;
    tok.text = digits;
    tok.number = std::stoll(digits);
    return tok;
  }

  Token lex_cmp(Token tok) {
    char c = text_[pos_];
    advance();
    bool eq = pos_ < text_.size() && text_[pos_] == '=';
    if (eq) advance();
    tok.kind = TokKind::Cmp;
    if (c == '=' && eq) {
      tok.cmp = CmpOp::Eq;
    } else if (c == '>') {
      tok.cmp = eq ? CmpOp::Ge : CmpOp::Gt;
    } else if (c == '<') {
      tok.cmp = eq ? CmpOp::Le : CmpOp::Lt;
    } else {
      throw ParseError("malformed comparison operator", tok.line, tok.col);
    }
    tok.text = cmp_name(tok.cmp);
    return tok;
  }

  Token lex_ident(Token tok) {
    std::string out;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '.') {
        out += c;
        advance();
      } else {
        break;
      }
    }
    tok.kind = TokKind::Ident;
    tok.text = std::move(out);
    return tok;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// --------------------------------------------------------------- parser

class Parser {
 public:
  explicit Parser(const std::string& text) : lexer_(text) {
    cur_ = lexer_.next();
  }

  AstPtr parse_query() {
    AstPtr e = parse_operand();
    if (cur_.kind == TokKind::Cmp) {
      CmpOp op = cur_.cmp;
      bump();
      Token lit = expect(TokKind::Number, "integer literal");
      auto node = std::make_unique<AstNode>();
      node->kind = AstKind::Compare;
      node->cmp = op;
      node->literal = lit.number;
      node->children.push_back(std::move(e));
      e = std::move(node);
    }
    expect(TokKind::End, "end of query");
    return e;
  }

 private:
  void bump() { cur_ = lexer_.next(); }

  Token expect(TokKind kind, const char* what) {
    if (cur_.kind != kind) {
      throw ParseError(std::string("expected ") + what, cur_.line, cur_.col);
    }
    Token tok = cur_;
    bump();
    return tok;
  }

  AstPtr parse_operand() {
    Token tok = expect(TokKind::Ident, "identifier");
    static const std::map<std::string, AstKind> kFuncs = {
        {"COUNT", AstKind::Count},       {"FILTER", AstKind::Filter},
        {"PROJECT", AstKind::Project},   {"UNION", AstKind::Union},
        {"INTERSECT", AstKind::Intersect}, {"EXCEPT", AstKind::Except},
        {"PLUS", AstKind::Plus}};
    auto fn = kFuncs.find(tok.text);
    if (fn == kFuncs.end()) return make_source(tok);

    auto node = std::make_unique<AstNode>();
    node->kind = fn->second;
    expect(TokKind::LParen, "'('");
    node->children.push_back(parse_operand());
    switch (node->kind) {
      case AstKind::Count:
        break;
      case AstKind::Filter:
        expect(TokKind::Comma, "','");
        node->pred = parse_predicate();
        break;
      case AstKind::Project:
        while (cur_.kind == TokKind::Comma) {
          bump();
          node->fields.push_back(expect(TokKind::Ident, "field name").text);
        }
        if (node->fields.empty()) {
          throw ParseError("PROJECT needs at least one field", cur_.line,
                           cur_.col);
        }
        break;
      default:  // binary set ops and PLUS
        expect(TokKind::Comma, "','");
        node->children.push_back(parse_operand());
        break;
    }
    expect(TokKind::RParen, "')'");
    return node;
  }

  AstPtr make_source(const Token& tok) {
    auto node = std::make_unique<AstNode>();
    node->kind = AstKind::Source;
    std::size_t dot = tok.text.find('.');
    if (dot == std::string::npos) {
      node->source = tok.text;
    } else {
      node->source = tok.text.substr(0, dot);
      node->projection = tok.text.substr(dot + 1);
      if (node->projection != "adds" && node->projection != "removes") {
        throw ParseError("source projection must be .adds or .removes",
                         tok.line, tok.col);
      }
    }
    if (node->source.empty()) {
      throw ParseError("empty source name", tok.line, tok.col);
    }
    return node;
  }

  Predicate parse_predicate() {
    Predicate pred;
    while (true) {
      Predicate::Clause clause;
      clause.field = expect(TokKind::Ident, "field name").text;
      Token op = expect(TokKind::Cmp, "comparison operator");
      clause.op = op.cmp;
      if (cur_.kind == TokKind::Number) {
        clause.literal = cur_.number;
        bump();
      } else if (cur_.kind == TokKind::String) {
        clause.literal = cur_.text;
        bump();
      } else {
        throw ParseError("expected literal", cur_.line, cur_.col);
      }
      pred.clauses.push_back(std::move(clause));
      if (cur_.kind == TokKind::Ident && cur_.text == "AND") {
        bump();
        continue;
      }
      break;
    }
    return pred;
  }

  Lexer lexer_;
  Token cur_;
};

std::string literal_text(const json& lit) {
  if (lit.is_string()) return "\"" + lit.get<std::string>() + "\"";
  return lit.dump();
}

}  // namespace

AstPtr parse(const std::string& text) {
  if (text.empty()) throw ParseError("empty query", 1, 1);
  AstPtr ast = Parser(text).parse_query();
  type_check(*ast);
  return ast;
}

std::string print(const AstNode& ast) {
  std::ostringstream out;
  switch (ast.kind) {
    case AstKind::Source:
      out << ast.source;
      if (!ast.projection.empty()) out << "." << ast.projection;
      break;
    case AstKind::Filter: {
      out << "FILTER(" << print(*ast.children[0]) << ", ";
      bool first = true;
      for (const auto& clause : ast.pred.clauses) {
        if (!first) out << " AND ";
        first = false;
        out << clause.field << " " << cmp_name(clause.op) << " "
            << literal_text(clause.literal);
      }
      out << ")";
      break;
    }
    case AstKind::Project:
      out << "PROJECT(" << print(*ast.children[0]);
      for (const auto& f : ast.fields) out << ", " << f;
      out << ")";
      break;
    case AstKind::Union:
    case AstKind::Intersect:
    case AstKind::Except: {
      const char* name = ast.kind == AstKind::Union      ? "UNION"
                         : ast.kind == AstKind::Intersect ? "INTERSECT"
                                                          : "EXCEPT";
      out << name << "(" << print(*ast.children[0]) << ", "
          << print(*ast.children[1]) << ")";
      break;
    }
    case AstKind::Count:
      out << "COUNT(" << print(*ast.children[0]) << ")";
      break;
    case AstKind::Plus:
      out << "PLUS(" << print(*ast.children[0]) << ", "
          << print(*ast.children[1]) << ")";
      break;
    case AstKind::Compare:
      out << print(*ast.children[0]) << " " << cmp_name(ast.cmp) << " "
          << ast.literal;
      break;
  }
  return out.str();
}

ExprType type_check(const AstNode& ast) {
  auto require = [&](const AstNode& child, ExprType want, const char* ctx) {
    if (type_check(child) != want) {
      throw DslTypeError(std::string(ctx) + ": operand has the wrong type");
    }
  };
  switch (ast.kind) {
    case AstKind::Source:
      return ExprType::SetT;
    case AstKind::Filter:
    case AstKind::Project:
      require(*ast.children[0], ExprType::SetT, "FILTER/PROJECT");
      return ExprType::SetT;
    case AstKind::Union:
    case AstKind::Intersect:
    case AstKind::Except:
      require(*ast.children[0], ExprType::SetT, "set operator");
      require(*ast.children[1], ExprType::SetT, "set operator");
      return ExprType::SetT;
    case AstKind::Count:
      require(*ast.children[0], ExprType::SetT, "COUNT");
      return ExprType::CountT;
    case AstKind::Plus:
      require(*ast.children[0], ExprType::CountT, "PLUS");
      require(*ast.children[1], ExprType::CountT, "PLUS");
      return ExprType::CountT;
    case AstKind::Compare:
      require(*ast.children[0], ExprType::CountT, "comparison");
      return ExprType::BoolT;
  }
  throw DslTypeError("unhandled AST node");
}

namespace {

bool node_monotone(const AstNode& node) {
  switch (node.kind) {
    case AstKind::Except:
      return false;
    case AstKind::Compare:
      return node.cmp == CmpOp::Gt || node.cmp == CmpOp::Ge;
    default:
      return true;
  }
}

}  // namespace

MonotonicityClass classify(const AstNode& ast) {
  type_check(ast);
  // Breadth-first so the witness is the shallowest non-monotone node.
  std::deque<std::pair<const AstNode*, std::string>> queue;
  queue.emplace_back(&ast, "root");
  while (!queue.empty()) {
    auto [node, path] = queue.front();
    queue.pop_front();
    if (!node_monotone(*node)) return {false, path};
    for (std::size_t i = 0; i < node->children.size(); ++i) {
      queue.emplace_back(node->children[i].get(),
                         path + "." + std::to_string(i));
    }
  }
  return {true, ""};
}

const char* plan_mode_name(PlanMode mode) {
  switch (mode) {
    case PlanMode::LocalThreshold: return "local_threshold";
    case PlanMode::LocalLowerBound: return "local_lower_bound";
    case PlanMode::Coordinated: return "coordinated";
  }
  return "?";
}

QueryPlan plan(const AstNode& ast, const MonotonicityClass& cls,
               bool stale_tolerant) {
  if (!cls.monotone) return {&ast, cls, PlanMode::Coordinated};
  if (ast.kind == AstKind::Compare) {
    return {&ast, cls, PlanMode::LocalThreshold};
  }
  return {&ast, cls,
          stale_tolerant ? PlanMode::LocalLowerBound : PlanMode::Coordinated};
}

// ------------------------------------------------------------- evaluator

namespace {

bool compare(CmpOp op, std::int64_t lhs, std::int64_t rhs) {
  switch (op) {
    case CmpOp::Gt: return lhs > rhs;
    case CmpOp::Ge: return lhs >= rhs;
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Le: return lhs <= rhs;
    case CmpOp::Eq: return lhs == rhs;
  }
  return false;
}

bool clause_matches(const Predicate::Clause& clause, const json& tuple) {
  if (!tuple.is_object()) return false;
  auto it = tuple.find(clause.field);
  if (it == tuple.end()) return false;
  const json& field = *it;
  if (clause.literal.is_number()) {
    if (!field.is_number()) return false;
    double lhs = field.get<double>();
    double rhs = clause.literal.get<double>();
    switch (clause.op) {
      case CmpOp::Gt: return lhs > rhs;
      case CmpOp::Ge: return lhs >= rhs;
      case CmpOp::Lt: return lhs < rhs;
      case CmpOp::Le: return lhs <= rhs;
      case CmpOp::Eq: return lhs == rhs;
    }
    return false;
  }
  if (!field.is_string()) return false;
  const std::string& lhs = field.get_ref<const std::string&>();
  const std::string& rhs = clause.literal.get_ref<const std::string&>();
  switch (clause.op) {
    case CmpOp::Gt: return lhs > rhs;
    case CmpOp::Ge: return lhs >= rhs;
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Le: return lhs <= rhs;
    case CmpOp::Eq: return lhs == rhs;
  }
  return false;
}

struct EvalValue {
  ExprType type;
  Value::Set set;
  std::int64_t count = 0;
  bool boolean = false;
};

EvalValue eval_node(const AstNode& ast, const Value& store) {
  switch (ast.kind) {
    case AstKind::Source: {
      const auto& entries = store.as_map();
      auto it = entries.find(ast.source);
      if (it == entries.end()) {
        throw UnboundSourceError("unbound source: " + ast.source);
      }
      const Value& v = it->second;
      if (ast.projection.empty()) {
        return {ExprType::SetT, v.as_set()};
      }
      const auto& t = v.as_twopset();
      return {ExprType::SetT,
              ast.projection == "adds" ? t.adds : t.removes};
    }
    case AstKind::Filter: {
      EvalValue in = eval_node(*ast.children[0], store);
      Value::Set out;
      for (const auto& elem : in.set) {
        json tuple = json::parse(elem, nullptr, false);
        bool ok = std::all_of(
            ast.pred.clauses.begin(), ast.pred.clauses.end(),
            [&](const auto& clause) { return clause_matches(clause, tuple); });
        if (ok) out.insert(elem);
      }
      return {ExprType::SetT, std::move(out)};
    }
    case AstKind::Project: {
      EvalValue in = eval_node(*ast.children[0], store);
      Value::Set out;
      for (const auto& elem : in.set) {
        json tuple = json::parse(elem, nullptr, false);
        if (!tuple.is_object()) continue;
        json projected = json::object();
        for (const auto& f : ast.fields) {
          if (auto it = tuple.find(f); it != tuple.end()) projected[f] = *it;
        }
        out.insert(projected.dump());
      }
      return {ExprType::SetT, std::move(out)};
    }
    case AstKind::Union: {
      EvalValue l = eval_node(*ast.children[0], store);
      EvalValue r = eval_node(*ast.children[1], store);
      l.set.insert(r.set.begin(), r.set.end());
      return l;
    }
    case AstKind::Intersect: {
      EvalValue l = eval_node(*ast.children[0], store);
      EvalValue r = eval_node(*ast.children[1], store);
      Value::Set out;
      for (const auto& e : l.set) {
        if (r.set.count(e)) out.insert(e);
      }
      return {ExprType::SetT, std::move(out)};
    }
    case AstKind::Except: {
      EvalValue l = eval_node(*ast.children[0], store);
      EvalValue r = eval_node(*ast.children[1], store);
      Value::Set out;
      for (const auto& e : l.set) {
        if (!r.set.count(e)) out.insert(e);
      }
      return {ExprType::SetT, std::move(out)};
    }
    case AstKind::Count: {
      EvalValue in = eval_node(*ast.children[0], store);
      return {ExprType::CountT, {}, static_cast<std::int64_t>(in.set.size())};
    }
    case AstKind::Plus: {
      EvalValue l = eval_node(*ast.children[0], store);
      EvalValue r = eval_node(*ast.children[1], store);
      return {ExprType::CountT, {}, l.count + r.count};
    }
    case AstKind::Compare: {
      EvalValue in = eval_node(*ast.children[0], store);
      EvalValue out{ExprType::BoolT};
      out.boolean = compare(ast.cmp, in.count, ast.literal);
      return out;
    }
  }
  throw DslTypeError("unhandled AST node in eval");
}

json to_result_json(const EvalValue& v) {
  switch (v.type) {
    case ExprType::SetT: {
      json arr = json::array();
      for (const auto& e : v.set) arr.push_back(e);
      return arr;
    }
    case ExprType::CountT: return json(v.count);
    case ExprType::BoolT: return json(v.boolean);
  }
  return json();
}

}  // namespace

json eval_ast(const AstNode& ast, const Value& store) {
  return to_result_json(eval_node(ast, store));
}

ExecResult execute(const QueryPlan& plan, std::span<const Value> stores,
                   std::uint32_t replica, ReadStrategy rs) {
  if (replica >= stores.size()) {
    throw LatticeError("execute: replica index out of range");
  }
  switch (plan.mode) {
    case PlanMode::LocalThreshold: {
      EvalValue v = eval_node(*plan.ast, stores[replica]);
      ExecResult out;
      out.kind = v.boolean ? ExecResult::Kind::Ready
                           : ExecResult::Kind::Unknown;
      return out;
    }
    case PlanMode::LocalLowerBound: {
      ExecResult out;
      out.kind = ExecResult::Kind::Observed;
      out.value = eval_ast(*plan.ast, stores[replica]);
      out.stale_tolerant = true;
      return out;
    }
    case PlanMode::Coordinated: {
      std::uint32_t n = static_cast<std::uint32_t>(stores.size());
      std::uint32_t needed = read_size(rs, n);
      if (needed > n) {
        ExecResult out;
        out.kind = ExecResult::Kind::Unavailable;
        return out;
      }
      Value joined = bottom(LatticeType::Map);
      for (std::uint32_t r : contact_set(replica, needed, n)) {
        joined = merge(joined, stores[r]);
      }
      ExecResult out;
      out.kind = ExecResult::Kind::Observed;
      out.value = eval_ast(*plan.ast, joined);
      return out;
    }
  }
  throw LatticeError("unhandled plan mode");
}

// ------------------------------------------------- counterexample search

namespace {

const char* kTuplePool[] = {
    "apple",
    "banana",
    "cherry",
    R"({"amount":150,"type":"GIFTCARD"})",
    R"({"amount":80,"type":"GIFTCARD"})",
    R"({"amount":300,"type":"FOOD"})",
};

Value::Set random_tuple_set(std::mt19937_64& rng) {
  Value::Set out;
  std::size_t n = rng() % 4;
  for (std::size_t i = 0; i < n; ++i) {
    out.insert(kTuplePool[rng() % std::size(kTuplePool)]);
  }
  return out;
}

Value random_store(const std::map<std::string, LatticeType>& key_types,
                   std::mt19937_64& rng) {
  Value::Entries entries;
  for (const auto& [key, type] : key_types) {
    switch (type) {
      case LatticeType::GSet:
        entries.emplace(key, Value::gset(random_tuple_set(rng)));
        break;
      case LatticeType::TwoPSet:
        entries.emplace(key, Value::twopset(random_tuple_set(rng),
                                            random_tuple_set(rng)));
        break;
      default:
        entries.emplace(key, bottom(type));
        break;
    }
  }
  return Value::map(std::move(entries));
}

// result(lo) must stay "below" result(hi) for a monotone query; a
// regression in any of the three result types is a counterexample.
bool regressed(const json& lo, const json& hi) {
  if (lo.is_boolean()) return lo.get<bool>() && !hi.get<bool>();
  if (lo.is_number_integer()) {
    return lo.get<std::int64_t>() > hi.get<std::int64_t>();
  }
  // set results: every earlier element must persist
  std::set<std::string> later;
  for (const auto& e : hi) later.insert(e.get<std::string>());
  for (const auto& e : lo) {
    if (!later.count(e.get<std::string>())) return true;
  }
  return false;
}

}  // namespace

std::optional<Counterexample> find_counterexample(
    const AstNode& ast, const std::map<std::string, LatticeType>& key_types,
    std::uint64_t seed, int attempts) {
  std::mt19937_64 rng(seed);
  for (int i = 0; i < attempts; ++i) {
    Value lo = random_store(key_types, rng);
    Value hi = merge(lo, random_store(key_types, rng));
    json lo_result = eval_ast(ast, lo);
    json hi_result = eval_ast(ast, hi);
    if (regressed(lo_result, hi_result)) {
      return Counterexample{std::move(lo), std::move(hi),
                            std::move(lo_result), std::move(hi_result)};
    }
  }
  return std::nullopt;
}

}  // namespace calmstore::dsl
