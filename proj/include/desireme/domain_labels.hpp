#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "desireme/errors.hpp"

namespace desireme {

/// Multi-hot domain membership of one query. All-zero means "unlabeled".
class DomainLabelVector {
 public:
  DomainLabelVector() = default;
  explicit DomainLabelVector(std::size_t num_domains) : bits_(num_domains, 0) {}

  static DomainLabelVector from_bitstring(std::string_view bits) {
    DomainLabelVector v(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] == '1') {
        v.bits_[i] = 1;
      } else if (bits[i] != '0') {
        throw InputError("label bitstring may only contain '0' and '1': \"" + std::string(bits) +
                         "\"");
      }
    }
    return v;
  }

  static DomainLabelVector one_hot(std::size_t num_domains, std::size_t index) {
    DomainLabelVector v(num_domains);
    v.set(index);
    return v;
  }

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_.at(i) != 0; }
  void set(std::size_t i) { bits_.at(i) = 1; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
  }
  bool any() const { return count() > 0; }

  std::string to_bitstring() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (bits_[i]) s[i] = '1';
    }
    return s;
  }

  DomainLabelVector& operator|=(const DomainLabelVector& other) {
    require(other.size() == size(), "label vectors differ in length");
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
    return *this;
  }

  bool operator==(const DomainLabelVector&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

}  // namespace desireme
