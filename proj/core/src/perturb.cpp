#include "srcattr/perturb.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include "json.hpp"
#include "srcattr/corpus.hpp"
#include "srcattr/error.hpp"
#include "srcattr/io_util.hpp"
#include "srcattr/synthetic.hpp"

namespace srcattr::perturb {
namespace {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  int get() const noexcept { return fd_; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

[[noreturn]] void hook_failed(const std::string& why) { throw Error(ErrorCode::HookFailed, why); }

std::vector<std::size_t> sample_positions(std::span<const std::size_t> candidates, std::size_t count,
                                          std::mt19937_64& rng) {
  std::vector<std::size_t> picked;
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(picked),
              static_cast<std::ptrdiff_t>(count), rng);
  return picked;
}

}  // namespace

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::Deletion: return "deletion";
    case AttackKind::Synonym: return "synonym";
    case AttackKind::Paraphrase: return "paraphrase";
  }
  return "unknown";
}

AttackKind parse_attack_kind(std::string_view name) {
  if (name == "deletion") return AttackKind::Deletion;
  if (name == "synonym") return AttackKind::Synonym;
  if (name == "paraphrase") return AttackKind::Paraphrase;
  throw Error(ErrorCode::InvalidConfig, "unknown attack kind '" + std::string(name) + "'");
}

void AttackSpec::validate() const {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "attack ratio must lie in [0, 1]");
  }
  if (kind == AttackKind::Paraphrase && command.empty()) {
    throw Error(ErrorCode::InvalidConfig, "paraphrase attack needs a command");
  }
  if (timeout.count() <= 0) throw Error(ErrorCode::InvalidConfig, "timeout must be positive");
  if (max_parallel == 0) throw Error(ErrorCode::InvalidConfig, "max_parallel must be positive");
}

SynonymLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open lexicon " + path.string());
  SynonymLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw RecordError(ErrorCode::MalformedRecord, line_no, "expected token<TAB>synonyms");
    }
    const auto token = corpus::normalize_text(line.substr(0, tab));
    if (token.empty() || token.find(' ') != std::string::npos) {
      throw RecordError(ErrorCode::MalformedRecord, line_no, "token must be a single word");
    }
    std::vector<std::string> syns;
    bool had_any = false;
    for (const auto& raw : io::split(std::string_view(line).substr(tab + 1), ',')) {
      auto syn = corpus::normalize_text(raw);
      if (syn.empty()) continue;
      had_any = true;
      if (syn == token || std::find(syns.begin(), syns.end(), syn) != syns.end()) continue;
      syns.push_back(std::move(syn));
    }
    if (syns.empty()) {
      if (had_any) {
        throw RecordError(ErrorCode::MalformedRecord, line_no, "token maps only to itself");
      }
      continue;
    }
    auto& slot = lex.entries[token];
    for (auto& s : syns) {
      if (std::find(slot.begin(), slot.end(), s) == slot.end()) slot.push_back(std::move(s));
    }
  }
  if (lex.entries.empty()) throw Error(ErrorCode::EmptyLexicon, path.string() + " has no entries");
  return lex;
}

void save_lexicon(const std::filesystem::path& path, const SynonymLexicon& lexicon,
                  const std::string& header_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (!header_json.empty()) out << "#config " << header_json << '\n';
  for (const auto& [token, syns] : lexicon.entries) {
    out << token << '\t';
    for (std::size_t i = 0; i < syns.size(); ++i) out << (i ? "," : "") << syns[i];
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

SynonymLexicon synthetic_lexicon(std::size_t vocabulary_size, std::size_t per_word,
                                 std::uint64_t seed) {
  if (vocabulary_size < 2 || per_word == 0) {
    throw Error(ErrorCode::InvalidConfig, "synthetic lexicon needs >= 2 words and per_word > 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, vocabulary_size - 1);
  SynonymLexicon lex;
  for (std::size_t w = 0; w < vocabulary_size; ++w) {
    auto& syns = lex.entries[corpus::vocabulary_word(w, vocabulary_size)];
    while (syns.size() < std::min(per_word, vocabulary_size - 1)) {
      const auto other = pick(rng);
      if (other == w) continue;
      auto word = corpus::vocabulary_word(other, vocabulary_size);
      if (std::find(syns.begin(), syns.end(), word) == syns.end()) syns.push_back(std::move(word));
    }
  }
  return lex;
}

std::size_t target_count(double ratio, std::size_t n_tokens) {
  const double raw = ratio * static_cast<double>(n_tokens);
  return std::min(n_tokens, static_cast<std::size_t>(std::floor(raw + 1e-9)));
}

PerturbResult delete_words(std::string_view text, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "deletion ratio must lie in [0, 1]");
  }
  const auto tokens = corpus::tokenize(corpus::normalize_text(text));
  PerturbResult out;
  out.target = target_count(ratio, tokens.size());
  if (out.target == 0) {
    out.text = std::string(text);
    return out;
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> all(tokens.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto doomed = sample_positions(all, out.target, rng);

  std::vector<std::string> kept;
  std::size_t next = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (next < doomed.size() && doomed[next] == i) {
      out.edits.push_back({i, tokens[i], {}});
      ++next;
    } else {
      kept.push_back(tokens[i]);
    }
  }
  out.text = corpus::join_tokens(kept);
  return out;
}

PerturbResult substitute_synonyms(std::string_view text, double ratio, std::uint64_t seed,
                                  const SynonymLexicon& lexicon) {
  if (lexicon.entries.empty()) throw Error(ErrorCode::EmptyLexicon, "lexicon has no entries");
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "substitution ratio must lie in [0, 1]");
  }
  auto tokens = corpus::tokenize(corpus::normalize_text(text));
  PerturbResult out;
  out.target = target_count(ratio, tokens.size());
  if (out.target == 0) {
    out.text = std::string(text);
    return out;
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (lexicon.entries.contains(tokens[i])) eligible.push_back(i);
  }
  const std::size_t applied = std::min(out.target, eligible.size());
  out.shortfall = out.target - applied;

  std::mt19937_64 rng(seed);
  for (std::size_t pos : sample_positions(eligible, applied, rng)) {
    const auto& syns = lexicon.entries.at(tokens[pos]);
    std::uniform_int_distribution<std::size_t> pick(0, syns.size() - 1);
    const auto& replacement = syns[pick(rng)];
    out.edits.push_back({pos, tokens[pos], replacement});
    tokens[pos] = replacement;
  }
  out.text = corpus::join_tokens(tokens);
  return out;
}

std::string paraphrase(std::string_view text, const std::string& command,
                       std::chrono::milliseconds timeout) {
  if (command.empty()) hook_failed("empty command");
  const auto deadline = std::chrono::steady_clock::now() + timeout;

  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) hook_failed("socketpair failed");
  Fd to_child(sv[0]), child_in(sv[1]);
  int pp[2];
  if (::pipe2(pp, O_CLOEXEC) != 0) hook_failed("pipe failed");
  Fd from_child(pp[0]), child_out(pp[1]);

  const char* cmd = command.c_str();
  const pid_t pid = ::fork();
  if (pid < 0) hook_failed("fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(child_in.get(), STDIN_FILENO);
    ::dup2(child_out.get(), STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", cmd, static_cast<char*>(nullptr));
    ::_exit(127);
  }
  child_in.reset();
  child_out.reset();
  ::fcntl(to_child.get(), F_SETFL, ::fcntl(to_child.get(), F_GETFL) | O_NONBLOCK);

  auto kill_child = [&] {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    int st = 0;
    ::waitpid(pid, &st, 0);
  };

  const std::string input = std::string(text) + "\n";
  std::size_t written = 0;
  std::string output;
  bool out_open = true;
  char buf[4096];
  while (out_open) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      kill_child();
      hook_failed("command timed out after " + std::to_string(timeout.count()) + " ms");
    }
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = {from_child.get(), POLLIN, 0};
    const bool writing = to_child.get() >= 0;
    if (writing) fds[nfds++] = {to_child.get(), POLLOUT, 0};
    const auto wait_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1;
    const int rc = ::poll(fds, nfds, static_cast<int>(std::min<long long>(wait_ms, 1000)));
    if (rc < 0 && errno != EINTR) {
      kill_child();
      hook_failed("poll failed");
    }
    if (rc <= 0) continue;
    if (writing && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t n = ::send(to_child.get(), input.data() + written, input.size() - written,
                               MSG_NOSIGNAL);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 && errno != EAGAIN && errno != EINTR) written = input.size();  // child closed stdin
      if (written == input.size()) {
        ::shutdown(to_child.get(), SHUT_WR);
        to_child.reset();
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t n = ::read(from_child.get(), buf, sizeof buf);
      if (n > 0) {
        output.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
        out_open = false;
      }
    }
  }

  int status = 0;
  while (true) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) hook_failed("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill_child();
      hook_failed("command timed out after " + std::to_string(timeout.count()) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    hook_failed("command exited with status " +
                std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }
  auto normalized = corpus::normalize_text(output);
  if (normalized.empty()) hook_failed("command produced no text");
  return normalized;
}

AttackBatch attack_batch(std::span<const QueryText> queries, const AttackSpec& spec,
                         const SynonymLexicon* lexicon) {
  spec.validate();
  if (spec.kind == AttackKind::Synonym && (lexicon == nullptr || lexicon->entries.empty())) {
    throw Error(ErrorCode::EmptyLexicon, "synonym attack needs a non-empty lexicon");
  }
  AttackBatch out;
  out.perturbed.resize(queries.size());
  out.manifest.resize(queries.size());

  auto run_one = [&](std::size_t i) {
    const auto& q = queries[i];
    const std::uint64_t seed = spec.seed + i;
    ManifestEntry& m = out.manifest[i];
    m.query_id = q.query_id;
    m.kind = spec.kind;
    m.ratio = spec.kind == AttackKind::Paraphrase ? 0.0 : spec.ratio;
    m.seed = seed;
    out.perturbed[i].query_id = q.query_id;
    switch (spec.kind) {
      case AttackKind::Deletion:
      case AttackKind::Synonym: {
        auto r = spec.kind == AttackKind::Deletion
                     ? delete_words(q.text, spec.ratio, seed)
                     : substitute_synonyms(q.text, spec.ratio, seed, *lexicon);
        m.target = r.target;
        m.shortfall = r.shortfall;
        m.edits = std::move(r.edits);
        out.perturbed[i].text = std::move(r.text);
        break;
      }
      case AttackKind::Paraphrase:
        out.perturbed[i].text = paraphrase(q.text, spec.command, spec.timeout);
        break;
    }
  };

  if (spec.kind != AttackKind::Paraphrase || spec.max_parallel == 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) run_one(i);
    return out;
  }
  // Paraphrase hooks are independent processes; run them in waves.
  for (std::size_t start = 0; start < queries.size(); start += spec.max_parallel) {
    const std::size_t end = std::min(queries.size(), start + spec.max_parallel);
    std::vector<std::exception_ptr> errors(end - start);
    {
      std::vector<std::jthread> workers;
      for (std::size_t i = start; i < end; ++i) {
        workers.emplace_back([&, i] {
          try {
            run_one(i);
          } catch (...) {
            errors[i - start] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return out;
}

void save_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> manifest,
                   const std::string& header_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (!header_json.empty()) out << "#config " << header_json << '\n';
  for (const auto& m : manifest) {
    nlohmann::ordered_json rec;
    rec["query_id"] = m.query_id;
    rec["kind"] = std::string(to_string(m.kind));
    rec["ratio"] = m.ratio;
    rec["seed"] = m.seed;
    rec["target"] = m.target;
    rec["shortfall"] = m.shortfall;
    auto edits = nlohmann::ordered_json::array();
    for (const auto& e : m.edits) edits.push_back({e.position, e.before, e.after});
    rec["edits"] = std::move(edits);
    out << rec.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace srcattr::perturb
