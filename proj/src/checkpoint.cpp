#include <cstring>
#include <fstream>

#include "rwsl/trainer.hpp"

namespace rwsl {

namespace {

constexpr char kMagic[8] = {'R', 'W', 'S', 'L', 'C', 'K', 'P', 'T'};

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw Error("cannot write " + path.string());
    }
    template <typename T>
    void pod(const T& v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    void str(const std::string& s) {
        pod(static_cast<std::uint64_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void matrix(const Matrix& m) {
        pod(static_cast<std::uint64_t>(m.rows()));
        pod(static_cast<std::uint64_t>(m.cols()));
        out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    }
    void finish() {
        out_.flush();
        if (!out_) throw Error("short write to " + path_.string());
    }

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw Error("cannot open " + path.string());
    }
    template <typename T>
    T pod() {
        T v{};
        if (!in_.read(reinterpret_cast<char*>(&v), sizeof v)) fail();
        return v;
    }
    std::string str() {
        const auto len = pod<std::uint64_t>();
        if (len > (1u << 20)) fail();
        std::string s(len, '\0');
        if (!in_.read(s.data(), static_cast<std::streamsize>(len))) fail();
        return s;
    }
    Matrix matrix() {
        const auto rows = pod<std::uint64_t>();
        const auto cols = pod<std::uint64_t>();
        if (rows > (1ull << 32) || cols > (1ull << 32)) fail();
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        if (!in_.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()))) {
            fail();
        }
        return m;
    }
    [[noreturn]] void fail() const { throw Error("corrupt or truncated checkpoint " + path_.string()); }
    void bytes(char* dst, std::size_t n) {
        if (!in_.read(dst, static_cast<std::streamsize>(n))) fail();
    }

private:
    std::ifstream in_;
    std::filesystem::path path_;
};

}  // namespace

const MlpModel& Checkpoint::model(const std::string& name) const {
    for (const auto& [n, m] : models) {
        if (n == name) return m;
    }
    throw Error("checkpoint has no model named " + name);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    Writer w(path);
    for (char c : kMagic) w.pod(c);
    w.pod(Checkpoint::kVersion);
    w.pod(static_cast<std::uint32_t>(ckpt.models.size()));
    for (const auto& [name, m] : ckpt.models) {
        w.str(name);
        w.pod(static_cast<std::uint8_t>(m.output));
        w.pod(m.version);
        w.pod(static_cast<std::uint32_t>(m.layer_dims.size()));
        for (auto d : m.layer_dims) w.pod(static_cast<std::uint64_t>(d));
        for (std::size_t l = 0; l < m.n_layers(); ++l) {
            w.matrix(m.weights[l]);
            w.matrix(m.biases[l]);
        }
    }
    w.pod(static_cast<std::uint32_t>(ckpt.optimizers.size()));
    for (const auto& [name, st] : ckpt.optimizers) {
        w.str(name);
        w.pod(st.step);
        w.pod(static_cast<std::uint32_t>(st.first_moment.size()));
        for (std::size_t i = 0; i < st.first_moment.size(); ++i) {
            w.matrix(st.first_moment[i]);
            w.matrix(st.second_moment[i]);
        }
    }
    w.matrix(ckpt.centroids);
    w.str(ckpt.rng_state);
    w.finish();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    Reader r(path);
    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) r.fail();
    if (r.pod<std::uint32_t>() != Checkpoint::kVersion) throw Error("unsupported checkpoint version in " + path.string());

    Checkpoint ckpt;
    const auto n_models = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_models; ++i) {
        MlpModel m;
        auto name = r.str();
        m.output = static_cast<OutputActivation>(r.pod<std::uint8_t>());
        m.version = r.pod<std::uint64_t>();
        const auto n_dims = r.pod<std::uint32_t>();
        if (n_dims < 2 || n_dims > 1024) r.fail();
        for (std::uint32_t d = 0; d < n_dims; ++d) m.layer_dims.push_back(r.pod<std::uint64_t>());
        for (std::uint32_t l = 0; l + 1 < n_dims; ++l) {
            m.weights.push_back(r.matrix());
            m.biases.push_back(r.matrix());
        }
        m.validate();
        ckpt.models.emplace_back(std::move(name), std::move(m));
    }
    const auto n_opt = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_opt; ++i) {
        AdamWState st;
        auto name = r.str();
        st.step = r.pod<std::uint64_t>();
        const auto n_mats = r.pod<std::uint32_t>();
        for (std::uint32_t k = 0; k < n_mats; ++k) {
            st.first_moment.push_back(r.matrix());
            st.second_moment.push_back(r.matrix());
        }
        ckpt.optimizers.emplace_back(std::move(name), std::move(st));
    }
    ckpt.centroids = r.matrix();
    ckpt.rng_state = r.str();
    return ckpt;
}

}  // namespace rwsl
