#include "gzipt/models/config.hpp"

#include <nlohmann/json.hpp>

#include "gzipt/common/error.hpp"

namespace gzipt::models {

void validate(const OnsetDetectorConfig& c) {
  require(c.branch_channels > 0 && c.conv2_channels > 0 && c.conv3_channels > 0 && c.hidden_fc > 0,
          "onset detector widths must be positive");
  require(c.beta > 0.0 && c.beta < 2.0, "beta must lie in (0, 2) so that both class weights stay positive");
  require(c.dropout >= 0.0 && c.dropout < 1.0, "dropout must lie in [0, 1)");
}

void validate(const IptDetectorConfig& c) {
  for (auto ch : c.encoder_channels) require(ch > 0, "encoder channels must be positive");
  require(c.n_ipt == kNumIpt, "n_ipt must be 8");
  require(c.dropout >= 0.0 && c.dropout < 1.0, "dropout must lie in [0, 1)");
  if (c.cnn_topology) {
    OnsetDetectorConfig cnn = c.cnn;
    cnn.beta = kDefaultBeta;  // unused by the IPT head
    validate(cnn);
  }
}

void to_json(nlohmann::json& j, const OnsetDetectorConfig& c) {
  j = {{"branch_channels", c.branch_channels}, {"conv2_channels", c.conv2_channels},
       {"conv3_channels", c.conv3_channels},   {"hidden_fc", c.hidden_fc},
       {"multi_shape", c.multi_shape},         {"beta", c.beta},
       {"dropout", c.dropout}};
}

void from_json(const nlohmann::json& j, OnsetDetectorConfig& c) {
  const OnsetDetectorConfig d;
  c.branch_channels = j.value("branch_channels", d.branch_channels);
  c.conv2_channels = j.value("conv2_channels", d.conv2_channels);
  c.conv3_channels = j.value("conv3_channels", d.conv3_channels);
  c.hidden_fc = j.value("hidden_fc", d.hidden_fc);
  c.multi_shape = j.value("multi_shape", d.multi_shape);
  c.beta = j.value("beta", d.beta);
  c.dropout = j.value("dropout", d.dropout);
}

void to_json(nlohmann::json& j, const IptDetectorConfig& c) {
  j = {{"encoder_channels", c.encoder_channels},
       {"n_ipt", c.n_ipt},
       {"dropout", c.dropout},
       {"skip_connection", c.skip_connection},
       {"cnn_topology", c.cnn_topology},
       {"cnn", c.cnn}};
}

void from_json(const nlohmann::json& j, IptDetectorConfig& c) {
  const IptDetectorConfig d;
  c.encoder_channels = j.value("encoder_channels", d.encoder_channels);
  c.n_ipt = j.value("n_ipt", d.n_ipt);
  c.dropout = j.value("dropout", d.dropout);
  c.skip_connection = j.value("skip_connection", d.skip_connection);
  c.cnn_topology = j.value("cnn_topology", d.cnn_topology);
  c.cnn = j.value("cnn", d.cnn);
}

}  // namespace gzipt::models
