// Copyright 2026 The ninkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <iterator>
#include <sstream>

#include "ninkit/binary_io.hpp"
#include "ninkit/optim.hpp"

NINKIT_BEGIN_NAMESPACE

namespace {

constexpr char kCheckpointMagic[8] = {'N', 'I', 'N', 'C', 'K', 'P', 'T', '1'};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const TrainState& state) {
  std::ostringstream body(std::ios::binary);
  body.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  binio::put_u64(body, net.config().hash());
  binio::put_u32(body, sizeof(Real));

  binio::put_u64(body, state.epoch);
  binio::put_f64(body, state.lr);
  binio::put_f64(body, state.best_train_accuracy);
  binio::put_u64(body, state.epochs_since_improvement);
  binio::put_u32(body, state.drops_done);
  binio::put_f64(body, state.best_val_accuracy);
  binio::put_u64(body, state.step);
  binio::put_u64(body, state.seed);
  binio::put_u32(body, state.finished ? 1 : 0);

  const auto params = net.parameters();
  binio::put_u32(body, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    write_tensor(body, p->value);
    write_tensor(body, p->velocity);
  }
  const std::string bytes = body.str();

  // Write to a sibling and rename so a crash never leaves a torn checkpoint.
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    binio::put_u64(out, fnv1a(bytes));
    if (!out) throw DataError("write failed for checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path, Network& net) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string();
  if (bytes.size() < sizeof(kCheckpointMagic) + 8 ||
      bytes.compare(0, sizeof(kCheckpointMagic), kCheckpointMagic, sizeof(kCheckpointMagic)) !=
          0) {
    throw DataError(where + ": bad magic (not a NINCKPT1 file)");
  }
  {
    std::istringstream tail(bytes.substr(bytes.size() - 8), std::ios::binary);
    const std::uint64_t stored = binio::get_u64(tail, "checksum");
    bytes.resize(bytes.size() - 8);
    if (stored != fnv1a(bytes)) throw DataError(where + ": checksum mismatch (corrupt file)");
  }

  std::istringstream in(bytes, std::ios::binary);
  in.ignore(sizeof(kCheckpointMagic));
  const std::uint64_t hash = binio::get_u64(in, "config hash");
  if (hash != net.config().hash()) {
    throw DataError(where + ": written for a different network config");
  }
  const std::uint32_t width = binio::get_u32(in, "real width");
  // Widening 32-bit checkpoints into the 64-bit build is exact; narrowing is
  // refused because it would silently lose precision.
  if (width > sizeof(Real) || (width != 4 && width != 8)) {
    throw DataError(where + ": stores " + std::to_string(width * 8) +
                    "-bit reals, this build uses " + std::to_string(sizeof(Real) * 8) + "-bit");
  }

  TrainState s;
  s.epoch = binio::get_u64(in, "train state");
  s.lr = binio::get_f64(in, "train state");
  s.best_train_accuracy = binio::get_f64(in, "train state");
  s.epochs_since_improvement = binio::get_u64(in, "train state");
  s.drops_done = binio::get_u32(in, "train state");
  s.best_val_accuracy = binio::get_f64(in, "train state");
  s.step = binio::get_u64(in, "train state");
  s.seed = binio::get_u64(in, "train state");
  s.finished = binio::get_u32(in, "train state") != 0;

  auto params = net.parameters();
  const std::uint32_t count = binio::get_u32(in, "parameter count");
  if (count != params.size()) {
    throw DataError(where + ": holds " + std::to_string(count) + " parameters, network has " +
                    std::to_string(params.size()));
  }
  std::vector<std::pair<Tensor4, Tensor4>> loaded;
  loaded.reserve(count);
  for (const Parameter* p : params) {
    Tensor4 value = read_tensor(in, width);
    Tensor4 velocity = read_tensor(in, width);
    if (value.dims() != p->value.dims() || velocity.dims() != p->value.dims()) {
      throw DataError(where + ": parameter shape " + value.dims().str() +
                      " disagrees with config shape " + p->value.dims().str());
    }
    loaded.emplace_back(std::move(value), std::move(velocity));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError(where + ": trailing bytes after parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i]->value = std::move(loaded[i].first);
    params[i]->velocity = std::move(loaded[i].second);
  }
  return s;
}

NINKIT_END_NAMESPACE
