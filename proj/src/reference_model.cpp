#include "ehpc/reference_model.hpp"

namespace ehpc {

std::string ModelConfig::model_id() const {
  return "ehpc-ref-L" + std::to_string(num_layers) + "-H" + std::to_string(num_heads) + "-dk" +
         std::to_string(head_dim) + "-s" + std::to_string(seed);
}

void ModelConfig::validate() const {
  if (num_layers < 1 || num_heads < 1 || head_dim < 1 || vocab_size < 1 || max_seq_len < 1) {
    throw ArgumentError("model config: num_layers, num_heads, head_dim, vocab_size and "
                        "max_seq_len must all be at least 1");
  }
}

template class ReferenceModel<double>;
template class ReferenceModel<float>;

}  // namespace ehpc
