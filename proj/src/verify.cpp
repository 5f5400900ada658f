#include "bugforge/pipeline.hpp"

#include "bugforge/frontend.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

extern char **environ;

namespace bugforge {

namespace fs = std::filesystem;

const char *to_string(Verdict v) {
  switch (v) {
  case Verdict::BenignIdentical: return "BenignIdentical";
  case Verdict::DivergenceDetected: return "DivergenceDetected";
  case Verdict::SinkViolation: return "SinkViolation";
  }
  return "?";
}

namespace {

struct Process {
  bool started = false;
  int exit_status = -1;
  int signal = 0;
  bool timed_out = false;
  std::string out, err;
};

Process run_process(const std::vector<std::string> &argv, const std::vector<std::string> &env, int timeout_seconds) {
  Process p;
  std::vector<char *> args;
  for (const auto &a : argv)
    args.push_back(const_cast<char *>(a.c_str()));
  args.push_back(nullptr);
  std::vector<char *> envp;
  for (const auto &e : env)
    envp.push_back(const_cast<char *>(e.c_str()));
  for (char **e = environ; *e; ++e) {
    std::string_view kv(*e);
    bool shadowed = std::any_of(env.begin(), env.end(), [&](const std::string &x) {
      return kv.substr(0, kv.find('=') + 1) == std::string_view(x).substr(0, x.find('=') + 1);
    });
    if (!shadowed)
      envp.push_back(*e);
  }
  envp.push_back(nullptr);

  // close-on-exec so concurrently spawned children never hold our pipe ends
  int out_pipe[2], err_pipe[2];
  if (pipe2(out_pipe, O_CLOEXEC) != 0)
    return p;
  if (pipe2(err_pipe, O_CLOEXEC) != 0) {
    close(out_pipe[0]);
    close(out_pipe[1]);
    return p;
  }
  pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]})
      close(fd);
    return p;
  }
  if (pid == 0) {
    int devnull = open("/dev/null", O_RDONLY);
    dup2(devnull, 0);
    dup2(out_pipe[1], 1);
    dup2(err_pipe[1], 2);
    execvpe(args[0], args.data(), envp.data());
    const char msg[] = "exec failed\n";
    ssize_t ignored = write(2, msg, sizeof msg - 1);
    (void)ignored;
    _exit(127);
  }
  p.started = true;
  close(out_pipe[1]);
  close(err_pipe[1]);
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(timeout_seconds);
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  int open_fds = 2;
  char buf[4096];
  while (open_fds > 0) {
    if (std::chrono::steady_clock::now() > deadline && !p.timed_out) {
      kill(pid, SIGKILL);
      p.timed_out = true;
    }
    if (poll(fds, 2, 50) < 0 && errno != EINTR)
      break;
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR)))
        continue;
      ssize_t n = read(fds[i].fd, buf, sizeof buf);
      if (n > 0) {
        (i == 0 ? p.out : p.err).append(buf, static_cast<std::size_t>(n));
      } else {
        close(fds[i].fd);
        fds[i].fd = -1;
        --open_fds;
      }
    }
  }
  int status = 0;
  waitpid(pid, &status, 0);
  if (WIFEXITED(status))
    p.exit_status = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    p.signal = WTERMSIG(status);
  return p;
}

std::vector<fs::path> c_files(const fs::path &dir) {
  std::vector<fs::path> out;
  for (const auto &rel : corpus_files(dir))
    out.push_back(dir / rel);
  return out;
}

fs::path scratch_dir() {
  static std::atomic<int> counter{0};
  fs::path d = fs::temp_directory_path() /
               ("bugforge-verify-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

} // namespace

std::string build_program(const std::vector<fs::path> &sources, const fs::path &binary, const VerifyOptions &options) {
  std::vector<std::string> argv{options.compiler, "-w", "-g", "-O0"};
  if (options.sanitize) {
    argv.emplace_back("-fsanitize=address");
    argv.emplace_back("-fno-omit-frame-pointer");
  }
  for (const auto &s : sources)
    argv.push_back(s.string());
  argv.emplace_back("-o");
  argv.push_back(binary.string());
  Process p = run_process(argv, {}, 300);
  std::string output = p.out + p.err;
  if (!p.started || p.exit_status != 0)
    throw PipelineError(exit_code::kBuildFailure, "build failed: " + options.compiler + "\n" + output);
  return output;
}

RunOutcome run_program(const fs::path &binary, const fs::path &input, const VerifyOptions &options) {
  Process p = run_process({binary.string(), input.string()},
                          {"ASAN_OPTIONS=detect_leaks=0:exitcode=86:abort_on_error=0"}, options.timeout_seconds);
  RunOutcome r;
  r.exit_status = p.exit_status;
  r.signal = p.signal;
  r.timed_out = p.timed_out;
  r.stdout_text = p.out;
  r.memory_error = p.err.find("AddressSanitizer") != std::string::npos ||
                   p.err.find("stack smashing detected") != std::string::npos || p.signal == SIGSEGV ||
                   p.signal == SIGBUS;
  return r;
}

Verdict judge(const RunOutcome &original, const RunOutcome &variant) {
  if (variant.memory_error && !original.memory_error)
    return Verdict::SinkViolation;
  if (original == variant)
    return Verdict::BenignIdentical;
  return Verdict::DivergenceDetected;
}

std::vector<InputVerdict> verify_variant(const fs::path &variant_dir, const fs::path &inputs_dir,
                                         const VerifyOptions &options) {
  fs::path original = options.original.value_or(fs::path());
  if (original.empty()) {
    fs::path gt = variant_dir / "ground_truth.json";
    if (!fs::is_regular_file(gt))
      throw PipelineError(exit_code::kFailure, "missing " + gt.string());
    original = nlohmann::json::parse(read_file(gt)).at("corpus").get<std::string>();
  }
  std::vector<fs::path> harness;
  fs::path harness_dir = options.harness.value_or(original.lexically_normal().parent_path() / "harness");
  if (fs::is_directory(harness_dir))
    for (const auto &e : fs::directory_iterator(harness_dir))
      if (e.path().extension() == ".c")
        harness.push_back(e.path());
  std::sort(harness.begin(), harness.end());

  fs::path scratch = scratch_dir();
  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{scratch};
  auto sources = [&](const fs::path &dir) {
    std::vector<fs::path> s = c_files(dir);
    s.insert(s.end(), harness.begin(), harness.end());
    return s;
  };
  build_program(sources(original), scratch / "original", options);
  build_program(sources(variant_dir), scratch / "variant", options);

  std::vector<fs::path> inputs;
  for (const auto &e : fs::directory_iterator(inputs_dir))
    if (e.is_regular_file())
      inputs.push_back(e.path());
  std::sort(inputs.begin(), inputs.end());
  std::vector<InputVerdict> out;
  for (const auto &in : inputs) {
    InputVerdict v;
    v.input = in.filename().string();
    v.original = run_program(scratch / "original", in, options);
    v.variant = run_program(scratch / "variant", in, options);
    v.verdict = judge(v.original, v.variant);
    out.push_back(std::move(v));
  }
  return out;
}

nlohmann::json verdicts_json(const std::vector<InputVerdict> &verdicts) {
  auto run = [](const RunOutcome &r) {
    return nlohmann::json{{"exit_status", r.exit_status},
                          {"signal", r.signal},
                          {"timed_out", r.timed_out},
                          {"memory_error", r.memory_error}};
  };
  nlohmann::json out = nlohmann::json::array();
  for (const auto &v : verdicts)
    out.push_back({{"input", v.input}, {"verdict", to_string(v.verdict)}, {"original", run(v.original)},
                   {"variant", run(v.variant)}});
  return out;
}

std::vector<fs::path> preprocess_corpus(const fs::path &in, const fs::path &out, const std::string &compiler,
                                        const std::vector<std::string> &flags) {
  std::vector<fs::path> written;
  for (const auto &rel : corpus_files(in)) {
    if (rel.extension() != ".c")
      continue;
    fs::path dst = out / rel;
    dst.replace_extension(".i");
    fs::create_directories(dst.parent_path());
    std::vector<std::string> argv{compiler, "-E"};
    argv.insert(argv.end(), flags.begin(), flags.end());
    argv.push_back((in / rel).string());
    argv.emplace_back("-o");
    argv.push_back(dst.string());
    Process p = run_process(argv, {}, 300);
    if (!p.started || p.exit_status != 0)
      throw PipelineError(exit_code::kBuildFailure, "preprocessing failed: " + (in / rel).string() + "\n" + p.err);
    written.push_back(dst);
  }
  return written;
}

} // namespace bugforge
