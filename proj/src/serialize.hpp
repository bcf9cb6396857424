#pragma once

#include "bnn/network.hpp"

#include <json.hpp>

namespace bnn::detail {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v);
json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::VectorXd vector_from_json(const json& j, const char* what);
Eigen::MatrixXd matrix_from_json(const json& j, const char* what);

json probit_to_json(const ProbitConfig& cfg);
ProbitConfig probit_from_json(const json& j);

json network_to_json(const NetworkState& net);
/// Throws nlohmann exceptions or ConfigError on malformed content.
NetworkState network_from_json(const json& j);

}  // namespace bnn::detail
