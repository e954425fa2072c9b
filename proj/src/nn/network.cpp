#include "trajgan/nn/network.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>

namespace trajgan::nn {

std::vector<Shape> trace_shapes(std::span<const LayerSpec> specs, const Shape& input_shape) {
  std::vector<Shape> out;
  Shape cur = input_shape;
  for (const LayerSpec& s : specs) {
    cur = infer_output_shape(s, cur);
    out.push_back(cur);
  }
  return out;
}

template <typename T>
Network<T>::Network(std::vector<LayerSpec> specs, Shape input_shape)
    : specs_(std::move(specs)), input_shape_(std::move(input_shape)) {
  Shape cur = input_shape_;
  for (const LayerSpec& s : specs_) {
    layers_.push_back(make_layer<T>(s, cur));
    cur = layers_.back()->output_shape();
  }
}

template <typename T>
Network<T>::Network(const Network& other) : specs_(other.specs_), input_shape_(other.input_shape_), last_depth_(0) {
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) {
    Network tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

template <typename T>
Shape Network<T>::output_shape() const {
  return layers_.empty() ? input_shape_ : layers_.back()->output_shape();
}

template <typename T>
std::vector<Shape> Network<T>::shape_trace() const {
  std::vector<Shape> out;
  for (const auto& l : layers_) out.push_back(l->output_shape());
  return out;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& x, const ForwardContext& ctx, std::size_t depth) {
  depth = std::min(depth, layers_.size());
  ensure_finite(x, "network input");
  Tensor<T> cur = x;
  for (std::size_t i = 0; i < depth; ++i) {
    cur = layers_[i]->forward(cur, ctx);
    ensure_finite(cur, to_string(layers_[i]->spec().kind).data());
  }
  last_depth_ = depth;
  return cur;
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_out, ParamGrad mode) {
  Tensor<T> g = grad_out;
  for (std::size_t i = last_depth_; i-- > 0;) {
    g = layers_[i]->backward(g, mode);
    ensure_finite(g, "backward pass");
  }
  return g;
}

template <typename T>
std::vector<Tensor<T>*> Network<T>::parameters() {
  std::vector<Tensor<T>*> out;
  for (auto& l : layers_) {
    for (Tensor<T>* p : l->parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>*> Network<T>::buffers() {
  std::vector<Tensor<T>*> out;
  for (auto& l : layers_) {
    for (Tensor<T>* p : l->buffers()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    for (const Tensor<T>* p : l->parameters()) n += p->size();
  }
  return n;
}

template <typename T>
void Network<T>::initialize(Rng& rng, double weight_std) {
  for (auto& l : layers_) l->initialize(rng, weight_std);
}

template <typename T>
void Network<T>::zero_grad() {
  for (Tensor<T>* p : parameters()) p->zero_grad();
}

template <typename T>
std::vector<T> Network<T>::snapshot() const {
  std::vector<T> out;
  auto* self = const_cast<Network*>(this);
  for (Tensor<T>* p : self->parameters()) out.insert(out.end(), p->data().begin(), p->data().end());
  for (Tensor<T>* b : self->buffers()) out.insert(out.end(), b->data().begin(), b->data().end());
  return out;
}

template <typename T>
void Network<T>::restore(std::span<const T> values) {
  std::size_t pos = 0;
  auto take = [&](Tensor<T>* t) {
    if (pos + t->size() > values.size()) throw std::invalid_argument("restore: snapshot too short");
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), t->size(), t->data().begin());
    pos += t->size();
  };
  for (Tensor<T>* p : parameters()) take(p);
  for (Tensor<T>* b : buffers()) take(b);
  if (pos != values.size()) throw std::invalid_argument("restore: snapshot size mismatch");
}

template <typename T>
std::uint64_t Network<T>::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto* self = const_cast<Network*>(this);
  for (Tensor<T>* p : self->parameters()) {
    const auto bytes = std::as_bytes(p->data());
    for (std::byte b : bytes) {
      h ^= static_cast<std::uint64_t>(b);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

template class Network<float>;
template class Network<double>;

}  // namespace trajgan::nn
