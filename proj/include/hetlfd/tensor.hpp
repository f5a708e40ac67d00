#pragma once

#include <cmath>
#include <cstddef>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetlfd/error.hpp"

namespace hetlfd {

/**
 * Dense row-major tensor of doubles.
 *
 * Invariants: product(shape) == size of data, every entry finite. Constructors
 * enforce both, so downstream numeric code never has to re-check.
 */
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        validate();
    }

    /// Zero tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)) {
        for (std::size_t d : shape_) {
            if (d == 0) throw ContractError("Tensor: zero extent in shape");
        }
        data_.assign(numel_of(shape_), 0.0);
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<std::size_t> shape, double value) {
        Tensor t(std::move(shape));
        for (double& v : t.data_) v = value;
        if (!std::isfinite(value)) throw NumericError("Tensor::full: non-finite fill value");
        return t;
    }

    static Tensor vector(std::vector<double> data) {
        std::size_t n = data.size();
        return Tensor({n}, std::move(data));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
        return Tensor({rows, cols}, std::move(data));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }

    std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) os << "x";
            os << shape_[i];
        }
        os << "]";
        return os.str();
    }

    static std::size_t numel_of(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

private:
    void validate() const {
        if (shape_.empty() && !data_.empty())
            throw ContractError("Tensor: rank-0 tensor with data");
        for (std::size_t d : shape_) {
            if (d == 0) throw ContractError("Tensor: zero extent in shape");
        }
        if (numel_of(shape_) != data_.size())
            throw ContractError("Tensor: shape " + shape_str() + " does not match data size " +
                                std::to_string(data_.size()));
        for (double v : data_) {
            if (!std::isfinite(v)) throw NumericError("Tensor: non-finite entry rejected");
        }
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Bit-level equality (distinguishes nothing about NaN since tensors hold none).
inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    return a.numel() == 0 ||
           std::memcmp(a.data(), b.data(), a.numel() * sizeof(double)) == 0;
}

/**
 * Named, ordered collection of tensors: the unit of checkpointing, gradient
 * keying and optimizer masking. Iteration order is lexicographic by name.
 */
class ParamSet {
public:
    static constexpr int kFormatVersion = 1;

    using Map = std::map<std::string, Tensor>;
    using const_iterator = Map::const_iterator;

    ParamSet() = default;

    void set(const std::string& name, Tensor t) { entries_[name] = std::move(t); }

    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    const Tensor& get(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end())
            throw ContractError("ParamSet: no parameter named '" + name + "'");
        return it->second;
    }

    Tensor& get(const std::string& name) {
        auto it = entries_.find(name);
        if (it == entries_.end())
            throw ContractError("ParamSet: no parameter named '" + name + "'");
        return it->second;
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const_iterator begin() const { return entries_.begin(); }
    const_iterator end() const { return entries_.end(); }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(entries_.size());
        for (const auto& [name, t] : entries_) out.push_back(name);
        return out;
    }

    /// Entries whose name starts with `prefix`, with the prefix stripped.
    ParamSet subset(const std::string& prefix) const {
        ParamSet out;
        for (const auto& [name, t] : entries_) {
            if (name.rfind(prefix, 0) == 0) out.set(name.substr(prefix.size()), t);
        }
        return out;
    }

    /// Copy of `other` merged in under `prefix`.
    void merge(const ParamSet& other, const std::string& prefix = "") {
        for (const auto& [name, t] : other) {
            if (has(prefix + name))
                throw ContractError("ParamSet::merge: duplicate name '" + prefix + name + "'");
            set(prefix + name, t);
        }
    }

    void erase(const std::string& name) { entries_.erase(name); }

    friend bool bitwise_equal(const ParamSet& a, const ParamSet& b) {
        if (a.entries_.size() != b.entries_.size()) return false;
        auto ia = a.begin();
        auto ib = b.begin();
        for (; ia != a.end(); ++ia, ++ib) {
            if (ia->first != ib->first || !bitwise_equal(ia->second, ib->second)) return false;
        }
        return true;
    }

private:
    Map entries_;
};

// --- checkpoint serialization ------------------------------------------------
//
// {"version":1, "entries":[{"name":..., "shape":[...], "data":[...]}, ...]}
// Entries sorted by name; doubles round-trip bit-exactly through the shortest
// decimal representation nlohmann/json emits.

inline nlohmann::json paramset_to_json(const ParamSet& params) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [name, t] : params) {
        entries.push_back({{"name", name}, {"shape", t.shape()}, {"data", t.raw()}});
    }
    return {{"version", ParamSet::kFormatVersion}, {"entries", entries}};
}

inline ParamSet paramset_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("version") || !j.contains("entries"))
        throw SchemaError("ParamSet: missing version/entries");
    if (j.at("version").get<int>() != ParamSet::kFormatVersion)
        throw SchemaError("ParamSet: unsupported format version");
    ParamSet out;
    for (const auto& e : j.at("entries")) {
        const auto name = e.at("name").get<std::string>();
        if (out.has(name)) throw SchemaError("ParamSet: duplicate entry '" + name + "'");
        out.set(name, Tensor(e.at("shape").get<std::vector<std::size_t>>(),
                             e.at("data").get<std::vector<double>>()));
    }
    return out;
}

inline void save_paramset(const ParamSet& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << paramset_to_json(params).dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline ParamSet load_paramset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("checkpoint parse error: ") + e.what());
    }
    try {
        return paramset_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("checkpoint schema error: ") + e.what());
    }
}

}  // namespace hetlfd
