// Copyright 2026 The Sticker Recommendation Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sr/corpus/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "sr/common/error.hpp"
#include "sr/common/rng.hpp"

namespace sr::corpus {
namespace {

// Frequent chat utterances, most popular first.
const char* const kBasePhrases[] = {
    "hi", "hello", "good morning", "good night", "how are you", "i am fine",
    "what are you doing", "nothing much", "where are you", "at home", "i love you",
    "love you too", "me too", "miss you", "miss you too", "kya kar raha hai",
    "kuch nahi", "kaha hai", "ghar pe hoon", "accha", "ok", "thank you", "welcome",
    "bye", "take care", "sweet dreams", "call me", "busy hoon", "khana khaya", "haan",
    "nahi", "kab aaoge", "kal milte hai", "happy birthday", "thanks bhai", "sorry",
    "no problem", "have a nice day", "what happened", "lol", "really", "yes",
    "who are you", "bahut accha", "kaisa hai", "main theek hoon", "tum kaise ho",
    "send pic", "wait", "see you later", "its ok", "good afternoon", "please call",
    "great"};

struct Link {
  const char* from;
  std::vector<std::pair<const char*, double>> to;
};

// Conversational structure for the base phrases; everything else gets a
// random reply distribution.
const std::vector<Link>& base_links() {
  static const std::vector<Link> links = {
      {"hi", {{"hello", 0.6}, {"how are you", 0.4}}},
      {"hello", {{"hi", 0.5}, {"how are you", 0.5}}},
      {"good morning", {{"good morning", 0.7}, {"have a nice day", 0.3}}},
      {"good night", {{"good night", 0.5}, {"sweet dreams", 0.5}}},
      {"how are you", {{"i am fine", 0.85}, {"main theek hoon", 0.15}}},
      {"i am fine", {{"what are you doing", 0.6}, {"great", 0.4}}},
      {"what are you doing", {{"nothing much", 0.6}, {"kuch nahi", 0.4}}},
      {"where are you", {{"at home", 0.6}, {"ghar pe hoon", 0.4}}},
      {"i love you", {{"love you too", 0.5}, {"me too", 0.3}, {"miss you", 0.2}}},
      {"miss you", {{"miss you too", 0.85}, {"me too", 0.15}}},
      {"kya kar raha hai", {{"kuch nahi", 0.85}, {"busy hoon", 0.15}}},
      {"kaha hai", {{"ghar pe hoon", 0.85}, {"at home", 0.15}}},
      {"thank you", {{"welcome", 0.85}, {"no problem", 0.15}}},
      {"happy birthday", {{"thank you", 0.85}, {"thanks bhai", 0.15}}},
      {"bye", {{"bye", 0.4}, {"take care", 0.6}}},
      {"sorry", {{"no problem", 0.6}, {"its ok", 0.4}}},
      {"call me", {{"ok", 0.6}, {"busy hoon", 0.4}}},
      {"kal milte hai", {{"ok", 0.5}, {"bye", 0.5}}},
      {"tum kaise ho", {{"main theek hoon", 0.85}, {"i am fine", 0.15}}},
      {"kaisa hai", {{"main theek hoon", 0.7}, {"bahut accha", 0.3}}},
      {"khana khaya", {{"haan", 0.6}, {"nahi", 0.4}}},
      {"kab aaoge", {{"kal milte hai", 0.85}, {"see you later", 0.15}}},
      {"what happened", {{"nothing much", 0.5}, {"kuch nahi", 0.5}}},
      {"send pic", {{"wait", 0.85}, {"ok", 0.15}}},
  };
  return links;
}

const char* const kWordPool[] = {
    "aaj", "kal", "bhai", "yaar", "dost", "movie", "chalo", "ghar", "office", "college",
    "kaam", "khana", "paani", "chai", "coffee", "party", "match", "game", "phone",
    "message", "photo", "gaana", "song", "school", "class", "exam", "padhai", "mummy",
    "papa", "didi", "bhaiya", "baat", "karo", "karna", "dekho", "suno", "bolo", "jaldi",
    "abhi", "baad", "mein", "bahut", "thoda", "kitna", "kaun", "kyu", "kaise", "kab",
    "kahan", "mast", "bore", "sad", "happy", "late", "early", "today", "tomorrow",
    "night", "morning", "evening", "weekend", "sunday", "train", "bus", "bike", "market",
    "shopping", "dinner", "lunch", "breakfast", "sleep", "neend", "gaya", "gayi", "raha",
    "rahi", "hoon", "hai", "tha", "nahi", "mat", "chahiye", "milna", "aao", "jao", "ruko",
    "pakka", "sach", "pyaar", "dil", "love", "miss", "call", "text", "reply", "busy", "free",
    "ready", "done", "please", "thanks", "come", "see", "look", "good", "great", "nice",
    "cool", "awesome", "funny", "crazy", "where", "what", "why", "you", "are", "for"};

const std::unordered_map<std::string, std::vector<std::string>>& chat_lexicon() {
  static const std::unordered_map<std::string, std::vector<std::string>> table = {
      {"good", {"gud", "gd"}},          {"morning", {"mrng", "morng", "mornin"}},
      {"night", {"nite", "n8", "nyt"}}, {"you", {"u", "yu"}},
      {"are", {"r"}},                   {"where", {"whr", "wer"}},
      {"what", {"wat", "wt"}},          {"love", {"luv", "lov"}},
      {"too", {"2", "to"}},             {"see", {"c"}},
      {"thank", {"thnk"}},              {"thanks", {"thx", "thnx"}},
      {"please", {"plz", "pls"}},       {"ok", {"k", "okk"}},
      {"miss", {"mis"}},                {"hello", {"helo", "hlo"}},
      {"how", {"hw"}},                  {"doing", {"doin", "dng"}},
      {"nothing", {"nthng", "nothin"}}, {"much", {"mch"}},
      {"home", {"hme"}},                {"dreams", {"drms"}},
      {"sweet", {"swt"}},               {"take", {"tk"}},
      {"care", {"cr"}},                 {"call", {"cl"}},
      {"happy", {"hpy"}},               {"birthday", {"bday", "bdy"}},
      {"sorry", {"sry", "sori"}},       {"problem", {"prblm", "prob"}},
      {"kya", {"kia", "kyaa"}},         {"kar", {"kr"}},
      {"raha", {"rha", "rhe"}},         {"hai", {"h", "he"}},
      {"nahi", {"nhi", "nai", "nahin"}}, {"kuch", {"kch", "kuchh"}},
      {"kaha", {"kahan", "kha"}},       {"ghar", {"ghr"}},
      {"pe", {"par", "p"}},             {"hoon", {"hu", "hun"}},
      {"accha", {"acha", "achha"}},     {"haan", {"ha", "han"}},
      {"main", {"mai", "me"}},          {"theek", {"thik", "thk"}},
      {"kaise", {"kese", "kaisey"}},    {"tum", {"tm"}},
      {"kal", {"kl"}},                  {"aaoge", {"aoge"}},
      {"khana", {"khna"}},              {"busy", {"bzy"}},
      {"wait", {"w8"}},                 {"later", {"l8r"}},
      {"great", {"gr8"}},               {"tomorrow", {"tmrw", "tmr"}},
      {"today", {"2day"}},              {"for", {"4"}},
      {"really", {"rly", "realy"}},     {"yes", {"ya", "yup"}},
      {"bye", {"by", "bbye"}},          {"welcome", {"wlcm", "welcm"}},
      {"happened", {"hpnd"}},           {"pic", {"pik"}},
      {"send", {"snd"}},                {"yaar", {"yr", "yar"}},
      {"bahut", {"bhut", "bohot"}},     {"kyu", {"kyun", "q"}},
      {"abhi", {"abi"}},                {"pyaar", {"pyar"}},
      {"thoda", {"thora"}},             {"message", {"msg"}},
      {"photo", {"pic", "foto"}},       {"movie", {"muvi"}},
      {"people", {"ppl"}},              {"awesome", {"awsm"}},
      {"college", {"clg"}},             {"because", {"coz", "bcoz"}},
  };
  return table;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool is_consonant(char c) { return c >= 'a' && c <= 'z' && !is_vowel(c); }

std::vector<std::string> split_words(std::string_view phrase) {
  std::vector<std::string> words;
  std::istringstream in{std::string(phrase)};
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += words[i];
  }
  return out;
}

void add_unique(std::vector<std::string>& out, std::string_view word, std::string candidate) {
  if (candidate.empty() || candidate == word) return;
  if (std::find(out.begin(), out.end(), candidate) == out.end()) out.push_back(std::move(candidate));
}

std::vector<std::string> transliterations(std::string_view word) {
  std::vector<std::string> out;
  const std::string w(word);
  const auto replace_first = [&](std::string_view from, std::string_view to) {
    const auto pos = w.find(from);
    if (pos == std::string::npos) return;
    std::string c = w;
    c.replace(pos, from.size(), to);
    add_unique(out, word, std::move(c));
  };
  if (w.find("cch") != std::string::npos) {
    replace_first("cch", "ch");
    replace_first("cch", "chh");
  } else if (w.find("chh") != std::string::npos) {
    replace_first("chh", "ch");
  } else {
    replace_first("ch", "chh");
  }
  replace_first("aa", "a");
  replace_first("ee", "i");
  replace_first("oo", "u");
  replace_first("w", "v");
  replace_first("ph", "f");
  replace_first("z", "j");
  // Undouble a doubled consonant ("accha" handled above, "hello" -> "helo").
  for (size_t i = 0; i + 1 < w.size(); ++i) {
    if (w[i] == w[i + 1] && is_consonant(w[i]) && w[i] != 'c') {
      std::string c = w;
      c.erase(i, 1);
      add_unique(out, word, std::move(c));
      break;
    }
  }
  // Lengthened final vowel ("haan" style): "na" -> "naa", "hi" -> "hii".
  if (w.size() >= 2 && is_vowel(w.back()) && w.back() != w[w.size() - 2]) {
    add_unique(out, word, w + w.back());
  }
  return out;
}

double zipf_weight(size_t rank, double s) { return 1.0 / std::pow(static_cast<double>(rank + 1), s); }

}  // namespace

std::string_view rule_name(VariantRule rule) {
  switch (rule) {
    case VariantRule::kDropVowels:
      return "drop_vowels";
    case VariantRule::kChatSubstitution:
      return "chat_substitution";
    case VariantRule::kRepeatChars:
      return "repeat_chars";
    case VariantRule::kTransliteration:
      return "transliteration";
  }
  return "unknown";
}

std::vector<std::string> apply_rule(VariantRule rule, std::string_view word) {
  std::vector<std::string> out;
  switch (rule) {
    case VariantRule::kDropVowels: {
      // Keep the first letter and a trailing 'a' (the romanized schwa in
      // "raha", "kya"); drop every other vowel.
      std::string c;
      for (size_t i = 0; i < word.size(); ++i) {
        const bool keep = i == 0 || !is_vowel(word[i]) || (i + 1 == word.size() && word[i] == 'a');
        if (keep) c.push_back(word[i]);
      }
      add_unique(out, word, std::move(c));
      break;
    }
    case VariantRule::kChatSubstitution: {
      const auto& table = chat_lexicon();
      const auto it = table.find(std::string(word));
      if (it != table.end()) {
        for (const auto& s : it->second) add_unique(out, word, s);
      }
      break;
    }
    case VariantRule::kRepeatChars:
      if (!word.empty() && std::isalpha(static_cast<unsigned char>(word.back()))) {
        add_unique(out, word, std::string(word) + std::string(3, word.back()));
      }
      break;
    case VariantRule::kTransliteration:
      out = transliterations(word);
      break;
  }
  return out;
}

std::set<std::string> enumerate_rule_variants(std::string_view phrase, VariantRule rule) {
  const auto words = split_words(phrase);
  std::vector<std::vector<std::string>> options;
  for (const auto& w : words) {
    std::vector<std::string> o{w};
    for (auto& r : apply_rule(rule, w)) o.push_back(std::move(r));
    options.push_back(std::move(o));
  }
  std::set<std::string> out;
  std::vector<size_t> idx(words.size(), 0);
  while (true) {
    std::vector<std::string> cur;
    for (size_t i = 0; i < words.size(); ++i) cur.push_back(options[i][idx[i]]);
    const auto s = join_words(cur);
    if (s != phrase) out.insert(s);
    size_t k = 0;
    while (k < idx.size() && ++idx[k] == options[k].size()) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return out;
}

std::vector<Conversation> SyntheticCorpus::parsed() const {
  std::vector<Conversation> convs;
  convs.reserve(conversations.size());
  for (size_t c = 0; c < conversations.size(); ++c) {
    Conversation conv;
    for (size_t i = 0; i < conversations[c].size(); ++i) {
      conv.push_back(make_message(conversations[c][i], c, static_cast<uint32_t>(i)));
    }
    convs.push_back(std::move(conv));
  }
  return convs;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& options) {
  if (options.n_intents < 2) throw ConfigError("synthetic corpus needs at least 2 intents");
  if (options.n_conversations < 0 || options.mean_length < 2) {
    throw ConfigError("invalid synthetic corpus size");
  }
  Rng rng(options.seed);
  SyntheticCorpus corpus;
  const int n = options.n_intents;

  // Canonical phrases: the base list first, then composed phrases.
  std::vector<std::string> canon;
  std::set<std::string> used;
  for (const char* p : kBasePhrases) {
    if (static_cast<int>(canon.size()) == n) break;
    canon.emplace_back(p);
    used.insert(p);
  }
  const size_t pool = std::size(kWordPool);
  while (static_cast<int>(canon.size()) < n) {
    const int len = 2 + static_cast<int>(rng.below(3));
    std::vector<std::string> words;
    for (int i = 0; i < len; ++i) words.emplace_back(kWordPool[rng.below(pool)]);
    auto phrase = join_words(words);
    if (used.insert(phrase).second) canon.push_back(std::move(phrase));
  }

  std::map<std::string, int> owner;  // phrase_key -> intent
  for (int i = 0; i < n; ++i) owner.emplace(phrase_key(canon[i]), i);

  const std::vector<VariantRule> all_rules = {VariantRule::kDropVowels,
                                              VariantRule::kChatSubstitution,
                                              VariantRule::kRepeatChars,
                                              VariantRule::kTransliteration};
  const char* const emoticons[] = {":)", ":p", ":d", "<3", ":("};

  corpus.intents.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& intent = corpus.intents[i];
    intent.intent_id = i;
    intent.canonical_phrase = canon[i];
    for (auto r : all_rules) {
      if (rng.bernoulli(0.75)) intent.variant_rules.push_back(r);
    }
    if (intent.variant_rules.empty()) intent.variant_rules.push_back(VariantRule::kChatSubstitution);

    // More popular phrases accumulate more spellings.
    const double popularity = zipf_weight(i, 0.5);
    const size_t target = 4 + static_cast<size_t>(std::lround(12.0 * popularity));
    intent.variants.push_back({canon[i], 1.0});
    const auto words = split_words(canon[i]);
    for (int attempt = 0; attempt < 60 && intent.variants.size() < target + 1; ++attempt) {
      std::vector<std::string> cur = words;
      bool changed = false;
      const int passes = rng.bernoulli(0.3) ? 2 : 1;
      for (int pass = 0; pass < passes; ++pass) {
        const auto rule = intent.variant_rules[rng.below(intent.variant_rules.size())];
        for (auto& w : cur) {
          if (rule == VariantRule::kRepeatChars && &w != &cur.back()) continue;
          const auto opts = apply_rule(rule, w);
          if (opts.empty() || !rng.bernoulli(0.6)) continue;
          w = opts[rng.below(opts.size())];
          changed = true;
        }
      }
      if (!changed) continue;
      std::string text = join_words(cur);
      if (rng.bernoulli(0.12)) {
        text += rng.bernoulli(0.5) ? "" : " ";
        text += emoticons[rng.below(std::size(emoticons))];
      }
      const auto key = phrase_key(text);
      if (word_count(tokenize(key)) > kMaxPairWords) continue;
      if (!owner.emplace(key, i).second) continue;  // taken by this or another intent
      const double w = 0.6 / std::sqrt(static_cast<double>(intent.variants.size()));
      intent.variants.push_back({std::move(text), w});
    }
  }

  // Reply distributions.
  std::map<std::string, int> by_canon;
  for (int i = 0; i < n; ++i) by_canon.emplace(canon[i], i);
  std::vector<bool> linked(n, false);
  for (const auto& link : base_links()) {
    const auto from = by_canon.find(link.from);
    if (from == by_canon.end()) continue;
    std::map<int, double> dist;
    double total = 0.0;
    for (const auto& [to, p] : link.to) {
      const auto t = by_canon.find(to);
      if (t == by_canon.end()) continue;
      dist[t->second] += p;
      total += p;
    }
    if (dist.empty()) continue;
    for (auto& [k, p] : dist) p /= total;
    corpus.intents[from->second].reply_distribution = std::move(dist);
    linked[from->second] = true;
  }
  for (int i = 0; i < n; ++i) {
    if (linked[i]) continue;
    const int k = std::min(n - 1, 2 + static_cast<int>(rng.below(3)));
    std::vector<int> targets;
    while (static_cast<int>(targets.size()) < k) {
      const int t = static_cast<int>(rng.below(n));
      if (t != i && std::find(targets.begin(), targets.end(), t) == targets.end()) {
        targets.push_back(t);
      }
    }
    std::map<int, double> dist;
    if (rng.bernoulli(0.3)) {
      dist[targets[0]] = 0.85;
      for (size_t j = 1; j < targets.size(); ++j) dist[targets[j]] += 0.15 / (targets.size() - 1);
    } else {
      double total = 0.0;
      std::vector<double> w(targets.size());
      for (auto& x : w) total += (x = 0.2 + rng.uniform());
      for (size_t j = 0; j < targets.size(); ++j) dist[targets[j]] += w[j] / total;
    }
    corpus.intents[i].reply_distribution = std::move(dist);
  }

  // Conversations.
  std::vector<double> start_weights(n);
  for (int i = 0; i < n; ++i) start_weights[i] = 0.5 / n + 0.5 * zipf_weight(i, 0.8);
  const auto emit = [&](int intent) {
    const auto& vs = corpus.intents[intent].variants;
    std::vector<double> w;
    w.reserve(vs.size());
    for (const auto& v : vs) w.push_back(v.weight);
    return vs[rng.categorical(w)].text;
  };
  for (int c = 0; c < options.n_conversations; ++c) {
    const int lo = std::max(2, options.mean_length / 2);
    const int len = lo + static_cast<int>(rng.below(static_cast<uint64_t>(2 * (options.mean_length - lo) + 1)));
    std::vector<std::string> conv;
    int cur = static_cast<int>(rng.categorical(start_weights));
    for (int m = 0; m < len; ++m) {
      conv.push_back(emit(cur));
      const auto& dist = corpus.intents[cur].reply_distribution;
      if (rng.bernoulli(0.1) || dist.empty()) {
        cur = static_cast<int>(rng.categorical(start_weights));
      } else {
        std::vector<int> ids;
        std::vector<double> ps;
        for (const auto& [k, p] : dist) {
          ids.push_back(k);
          ps.push_back(p);
        }
        cur = ids[rng.categorical(ps)];
      }
    }
    corpus.conversations.push_back(std::move(conv));
  }

  for (const auto& intent : corpus.intents) {
    for (const auto& v : intent.variants) corpus.ground_truth[phrase_key(v.text)] = intent.intent_id;
  }
  return corpus;
}

void write_ground_truth(const std::string& path, const std::map<std::string, int>& ground_truth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write ground truth: " + path);
  for (const auto& [phrase, id] : ground_truth) out << phrase << '\t' << id << '\n';
}

std::map<std::string, int> read_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ground truth: " + path);
  std::map<std::string, int> gt;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw FormatError(FormatError::Code::kCorrupt, "bad ground truth line: " + line);
    }
    gt[line.substr(0, tab)] = std::stoi(line.substr(tab + 1));
  }
  return gt;
}

void write_intents(const std::string& path, const std::vector<SyntheticIntent>& intents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write intents: " + path);
  out.precision(17);
  for (const auto& it : intents) {
    out << it.intent_id << '\t' << it.canonical_phrase << '\t';
    for (size_t i = 0; i < it.variant_rules.size(); ++i) {
      out << (i ? "," : "") << rule_name(it.variant_rules[i]);
    }
    out << '\t';
    bool first = true;
    for (const auto& [k, p] : it.reply_distribution) {
      out << (first ? "" : ",") << k << ':' << p;
      first = false;
    }
    out << '\n';
  }
}

std::vector<SyntheticIntent> read_intents(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open intents: " + path);
  std::vector<SyntheticIntent> intents;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::string col;
    std::istringstream ls(line);
    while (std::getline(ls, col, '\t')) cols.push_back(col);
    if (cols.size() < 4) throw FormatError(FormatError::Code::kCorrupt, "bad intent line: " + line);
    SyntheticIntent it;
    it.intent_id = std::stoi(cols[0]);
    it.canonical_phrase = cols[1];
    std::istringstream rs(cols[2]);
    std::string r;
    while (std::getline(rs, r, ',')) {
      for (auto rule : {VariantRule::kDropVowels, VariantRule::kChatSubstitution,
                        VariantRule::kRepeatChars, VariantRule::kTransliteration}) {
        if (rule_name(rule) == r) it.variant_rules.push_back(rule);
      }
    }
    std::istringstream ds(cols[3]);
    std::string kv;
    while (std::getline(ds, kv, ',')) {
      const auto colon = kv.find(':');
      if (colon == std::string::npos) continue;
      it.reply_distribution[std::stoi(kv.substr(0, colon))] = std::stod(kv.substr(colon + 1));
    }
    it.variants.push_back({it.canonical_phrase, 1.0});
    intents.push_back(std::move(it));
  }
  return intents;
}

}  // namespace sr::corpus
