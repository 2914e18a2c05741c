#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "totstab/io.hpp"

namespace totstab::detail {

inline std::string escape_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~')
            out += "~0";
        else if (c == '/')
            out += "~1";
        else
            out += c;
    }
    return out;
}

inline std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + escape_token(key); }
inline std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

inline const Json& require(const Json& j, const std::string& key, const std::string& ptr) {
    if (!j.is_object()) throw SchemaError(ptr.empty() ? "/" : ptr, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(child(ptr, key), "missing required field");
    return *it;
}

inline double as_double(const Json& j, const std::string& ptr) {
    if (!j.is_number()) throw SchemaError(ptr, "expected a number");
    return j.get<double>();
}

inline int as_int(const Json& j, const std::string& ptr) {
    if (!j.is_number_integer()) throw SchemaError(ptr, "expected an integer");
    return j.get<int>();
}

inline std::string as_string(const Json& j, const std::string& ptr) {
    if (!j.is_string()) throw SchemaError(ptr, "expected a string");
    return j.get<std::string>();
}

inline bool as_bool(const Json& j, const std::string& ptr) {
    if (!j.is_boolean()) throw SchemaError(ptr, "expected a boolean");
    return j.get<bool>();
}

inline const Json& as_array(const Json& j, const std::string& ptr) {
    if (!j.is_array()) throw SchemaError(ptr, "expected an array");
    return j;
}

inline double get_double(const Json& j, const std::string& key, const std::string& ptr) {
    return as_double(require(j, key, ptr), child(ptr, key));
}

inline std::optional<double> opt_double(const Json& j, const std::string& key, const std::string& ptr) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return as_double(*it, child(ptr, key));
}

// null stands for a value that was not computed; "inf", "-inf" and "nan" for nonfinite ones
inline double nullable_double(const Json& j, const std::string& key, const std::string& ptr) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return 0.0;
    if (it->is_string()) {
        const std::string& s = it->get_ref<const std::string&>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    return as_double(*it, child(ptr, key));
}

inline Vector as_vector(const Json& j, const std::string& ptr) {
    as_array(j, ptr);
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = as_double(j[i], child(ptr, i));
    return v;
}

inline std::vector<double> as_std_vector(const Json& j, const std::string& ptr) {
    Vector v = as_vector(j, ptr);
    return {v.data(), v.data() + v.size()};
}

inline std::vector<int> as_int_vector(const Json& j, const std::string& ptr) {
    as_array(j, ptr);
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_int(j[i], child(ptr, i)));
    return out;
}

inline Matrix as_matrix(const Json& j, const std::string& ptr) {
    as_array(j, ptr);
    if (j.empty()) throw SchemaError(ptr, "expected a nonempty array of rows");
    const std::size_t cols = as_array(j[0], child(ptr, 0)).size();
    Matrix m(j.size(), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        const std::string rp = child(ptr, r);
        as_array(j[r], rp);
        if (j[r].size() != cols) throw SchemaError(rp, "ragged matrix row");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_double(j[r][c], child(rp, c));
    }
    return m;
}

inline Json vec_json(const Eigen::Ref<const Vector>& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Json num_json(double v) {
    if (std::isfinite(v)) return Json(v);
    if (std::isnan(v)) return Json("nan");
    return Json(v > 0 ? "inf" : "-inf");
}

template <class T>
inline Json opt_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

// rethrows library argument errors under the pointer of the value being built
template <class F>
auto at_pointer(const std::string& ptr, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const SchemaError&) {
        throw;
    } catch (const ArgumentError& e) {
        throw SchemaError(ptr.empty() ? "/" : ptr, e.what());
    } catch (const CapabilityError& e) {
        throw SchemaError(ptr.empty() ? "/" : ptr, e.what());
    }
}

} // namespace totstab::detail
