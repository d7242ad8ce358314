// Loads the sample instance and network and compares the three solvers.

#include <iostream>
#include <string>

#include "nlcg/io.hpp"
#include "nlcg/piece_optimize.hpp"

int main(int argc, char** argv) {
  using namespace nlcg;
  const std::string dir = argc > 1 ? argv[1] : NLCG_DEMO_DIR;
  const auto inst = io::instance_from_json(io::read_json_file(dir + "/instance.json"));
  const auto net = io::network_from_json(io::read_json_file(dir + "/network.json"));

  const auto brute = brute_force_max(inst.graph, inst.utilities, inst.payoffs, net);
  const auto exact = enumerate_optimize(inst.graph, inst.utilities, inst.payoffs, net, InnerSolver::exact());
  const auto local = iterative_optimize(inst.graph, inst.utilities, inst.payoffs, net);

  std::cout << "brute force  q=" << brute.q << " over " << brute.evaluations << " joint actions\n";
  std::cout << "enumerate    q=" << exact.q_max << " over " << exact.pieces_visited << " pieces\n";
  std::cout << "iterative    q=" << local.q_max << " over " << local.pieces_visited << " pieces ("
            << to_string(local.terminated_by) << ")\n";
  std::cout << "best joint action:";
  for (int a : exact.a_max) std::cout << ' ' << a;
  std::cout << "\n";
  return exact.q_max == brute.q ? 0 : 1;
}
